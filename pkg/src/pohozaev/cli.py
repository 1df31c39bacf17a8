"""Command line front end.

    pohozaev solve CONFIG [--set key=value ...] [--output DIR]
    pohozaev fiber CONFIG ...
    pohozaev check-hypotheses CONFIG ...
    pohozaev sweep CONFIG ...

Every run writes into one directory: ``report.toml`` (resolved config plus
results), ``summary.json`` (machine-readable results and an artifact list),
CSV data files and, unless ``png`` is dropped from ``output.formats``,
matplotlib renderings of the same data.  CSVs use ``,`` separators, ``.``
decimals, LF line endings and ``repr`` floats, so reruns with the same seed
are byte-identical.

The output directory defaults to ``$POHOZAEV_OUTPUT_ROOT/<command>``
(``./pohozaev-runs/<command>`` when unset).  Exit codes: 0 success, 20 a
non-surrogate hypothesis failed, otherwise ``errors.EXIT_CODES``.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import tomli_w

from . import harness
from .config import RunConfig, config_to_dict, load_config, parse_config, emit_config
from .core import DilationAction, fiber
from .errors import HYPOTHESIS_FAILURE_EXIT, NoConvergence, PohozaevError, exit_code_for
from .grids import GridFunction, RadialGrid, read_csv, resample, to_csv
from .problems import build_family
from .solver import initial_guess, solve, solve_discontinuous

ENV_OUTPUT_ROOT = "POHOZAEV_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "pohozaev-runs"


# ---------------------------------------------------------------------------
# writers


def _num(x):
    """JSON/TOML-safe float: non-finite values become strings."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in x]
    return x


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(x) for x in row) + "\n")
    return buf.getvalue()


class Run:
    """Output directory plus the bookkeeping that ends up in ``summary.json``."""

    def __init__(self, cfg: RunConfig, directory: Path):
        self.cfg = cfg
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.artifacts: List[str] = []
        self.results: dict = {}
        self.formats = set(cfg.output.formats)

    def text(self, name: str, body: str, fmt: str) -> None:
        if fmt not in self.formats:
            return
        with open(self.dir / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(body)
        self.artifacts.append(name)

    def csv(self, name: str, header, rows) -> None:
        self.text(name, csv_text(header, rows), "csv")

    def plot(self, name: str, draw) -> None:
        """Render lazily with the Agg backend; a missing matplotlib only skips the image."""
        if "png" not in self.formats:
            return
        try:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            return
        fig, ax = plt.subplots(figsize=(6, 4), dpi=100)
        try:
            draw(ax)
            fig.tight_layout()
            fig.savefig(self.dir / name, metadata={"Software": None})
        finally:
            plt.close(fig)
        self.artifacts.append(name)

    def finish(self, exit_code: int, error: Optional[BaseException] = None) -> int:
        partial = error is not None
        summary = {
            "command": self.cfg.command,
            "exit_code": exit_code,
            "partial": partial,
            "results": _num(self.results),
        }
        if error is not None:
            summary["error"] = {"type": type(error).__name__, "message": str(error)}
        report = {"config": config_to_dict(self.cfg), "results": _num(self.results)}
        report["run"] = {"exit_code": exit_code, "partial": partial}
        if error is not None:
            report["run"]["error"] = f"{type(error).__name__}: {error}"
        self.text("report.toml", tomli_w.dumps(_toml_safe(report)), "toml")
        summary["artifacts"] = sorted(self.artifacts + (["summary.json"] if "json" in self.formats else []))
        self.text("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n", "json")
        return exit_code


def _toml_safe(obj):
    """TOML has no null and no heterogeneous nesting of None; drop ``None`` entries."""
    if isinstance(obj, dict):
        return {k: _toml_safe(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_toml_safe(v) for v in obj if v is not None]
    return obj


# ---------------------------------------------------------------------------
# commands


def _fiber_rows(fp):
    t = np.concatenate([fp.t_samples, [fp.t_star]])
    h = np.concatenate([fp.h_values, [fp.h_star]])
    order = np.argsort(t, kind="stable")
    k_star = fp.k_residual
    rows = []
    ks = np.concatenate([fp.k_values, [np.nan]])
    for i in order:
        star = i == len(t) - 1
        rows.append((t[i], h[i], k_star if star else ks[i], int(star)))
    return rows


def _fiber_plot(fp):
    def draw(ax):
        ax.semilogx(fp.t_samples, fp.h_values, lw=1.2, label="h(t)")
        ax.axvline(fp.t_star, color="k", ls="--", lw=0.8, label=f"t* = {fp.t_star:.6g}")
        ax.set_xlabel("t")
        ax.set_ylabel("h(t)")
        ax.legend()

    return draw


def _fiber_grid(cfg: RunConfig):
    fc = cfg.fiber
    return np.geomspace(fc.t_min, fc.t_max, fc.points)


def _profile_plot(u: GridFunction):
    def draw(ax):
        g = u.grid
        if isinstance(g, RadialGrid):
            ax.plot(g.radii, u.values, lw=1.2)
            ax.set_xlabel("r")
            ax.set_ylabel("u")
        elif g.dim == 1:
            ax.plot(g.coords(0), u.values, lw=1.2)
            ax.set_xlabel("x")
            ax.set_ylabel("u")
        else:
            x, y = g.coords(0), g.coords(1)
            sl = (slice(None), slice(None)) + tuple(m // 2 for m in g.shape[2:])
            im = ax.imshow(u.values[sl].T, origin="lower", extent=(x[0], x[-1], y[0], y[-1]), cmap="viridis")
            ax.figure.colorbar(im, ax=ax)
            ax.set_xlabel("x1")
            ax.set_ylabel("x2")

    return draw


def _same_grid(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, RadialGrid):
        return a.dim == b.dim and np.array_equal(a.radii, b.radii)
    return a == b


def _write_solution(run: Run, rep, inst, fam) -> None:
    run.text("solution.csv", to_csv(rep.u), "csv")
    run.csv(
        "energy_trace.csv",
        ("iteration", "kind", "energy", "t_star", "K_rel", "el", "el_tangent", "step"),
        [(e.iteration, e.kind, e.energy, e.t_star, e.K_rel, e.el, e.el_tangent, e.step) for e in rep.trace],
    )
    fp = fiber(fam, DilationAction(), rep.u, _fiber_grid(run.cfg))
    run.csv("fiber.csv", ("t", "h", "K", "t_star"), _fiber_rows(fp))
    run.plot("solution.png", _profile_plot(rep.u))
    run.plot("fiber.png", _fiber_plot(fp))

    def trace(ax):
        it = [e.iteration for e in rep.trace]
        en = [e.energy for e in rep.trace]
        ax.plot(it, en, lw=1.2)
        ax.set_xlabel("iteration")
        ax.set_ylabel("energy")

    if rep.trace:
        run.plot("energy_trace.png", trace)


def cmd_solve(run: Run) -> int:
    cfg = run.cfg
    inst = cfg.instance()
    fam = build_family(inst)
    run.results["problem"] = inst.describe()
    if inst.nonlinearity.continuous:
        try:
            rep = solve(inst, cfg.solver)
        except NoConvergence as exc:
            if exc.report is not None:
                run.results["solve"] = exc.report.summary()
                _write_solution(run, exc.report, inst, fam)
            raise
        run.results["solve"] = rep.summary()
        _write_solution(run, rep, inst, fam)
        return 0
    mc = cfg.mollifier
    dr = solve_discontinuous(inst, mc.eps_schedule, cfg.solver, mc.relative_to_gap, mc.rel_tol)
    rep = dr.final
    run.results["solve"] = rep.summary()
    run.results["mollifier"] = {
        "epsilons": list(dr.epsilons),
        "energies": list(dr.energies),
        "violations": list(dr.violations),
        "relative_violations": list(dr.relative_violations),
        "support_volume": dr.support_volume,
        "tol": dr.tol,
        "monotone": bool(np.all(np.diff(dr.relative_violations) <= 0)),
    }
    run.csv(
        "mollifier.csv",
        ("eps", "energy", "violation", "relative_violation", "status"),
        [(e, r.energy, v, v / dr.support_volume, r.status)
         for e, r, v in zip(dr.epsilons, dr.reports, dr.violations)],
    )
    # the final stage solved the mollified problem; its fiber is taken against the original one
    _write_solution(run, rep, inst, fam)
    return 0


def cmd_fiber(run: Run) -> int:
    cfg = run.cfg
    inst = cfg.instance()
    fam = build_family(inst)
    grid = inst.build_grid()
    if cfg.fiber.profile:
        u = read_csv(cfg.fiber.profile)
        if not _same_grid(u.grid, grid):
            u = resample(u, grid)
        source = cfg.fiber.profile
    else:
        u = initial_guess(inst, grid, fam)
        source = "initial_guess"
    fp = fiber(fam, DilationAction(), u, _fiber_grid(cfg))
    run.results["fiber"] = {
        "profile": source,
        "t_star": fp.t_star,
        "h_star": fp.h_star,
        "K_residual": fp.k_residual,
        "tail_negative": fp.tail_negative,
        "h_max_scan": float(np.max(fp.h_values)),
    }
    run.csv("fiber.csv", ("t", "h", "K", "t_star"), _fiber_rows(fp))
    run.plot("fiber.png", _fiber_plot(fp))
    return 0


def cmd_check(run: Run) -> int:
    cfg = run.cfg
    inst = cfg.instance()
    rep = harness.check_instance(inst, seed=cfg.seed, n=cfg.check.samples, n_small=cfg.check.small_samples)
    run.results["hypotheses"] = {
        "family": rep.family,
        "passed": rep.passed,
        "failures": [e.name for e in rep.failures],
    }
    run.text("hypotheses.json", rep.to_json() + "\n", "json")
    run.text("hypotheses.txt", rep.to_text() + "\n", "csv")
    run.csv(
        "hypotheses.csv",
        ("name", "surrogate", "passed", "samples", "worst", "threshold"),
        [(e.name, e.surrogate, e.passed, e.samples, e.worst, e.threshold) for e in rep.entries],
    )
    return 0 if rep.passed else HYPOTHESIS_FAILURE_EXIT


# sweep ----------------------------------------------------------------------


def _value_tag(v) -> str:
    s = json.dumps(v) if not isinstance(v, str) else v
    return "".join(c if c.isalnum() or c in "._-" else "_" for c in s)[:40]


def _sweep_one(args):
    """Worker: one sweep entry in its own directory.  Returns a row for sweep.csv."""
    text, override, directory = args
    try:
        cfg = parse_config(text, [override, "command=solve"])
    except PohozaevError as exc:
        return exit_code_for(exc), {}, str(exc)
    code, results, err = _execute(cfg, Path(directory))
    return code, results, err


def cmd_sweep(run: Run) -> int:
    cfg = run.cfg
    sw = cfg.sweep
    base = emit_config(cfg)
    jobs = []
    for i, v in enumerate(sw.values):
        val = tomli_w.dumps({"v": list(v) if isinstance(v, tuple) else v})[4:].strip()
        override = f"{sw.parameter}={val}"
        jobs.append((base, override, str(run.dir / f"run_{i:03d}_{_value_tag(v)}")))
    if sw.parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(sw.parallel, len(jobs))) as pool:
            outcomes = list(pool.map(_sweep_one, jobs))
    else:
        outcomes = [_sweep_one(j) for j in jobs]
    rows = []
    worst = 0
    for (v, job, (code, results, err)) in zip(sw.values, jobs, outcomes):
        s = results.get("solve", {})
        nan = float("nan")
        rows.append((
            json.dumps(list(v) if isinstance(v, tuple) else v).replace(",", ";"),
            code,
            s.get("status", "error"),
            s.get("energy", nan),
            s.get("K_relative", nan),
            s.get("el_residual", nan),
            s.get("iterations", -1),
            Path(job[2]).name,
        ))
        worst = worst or code
    run.csv(
        "sweep.csv",
        (sw.parameter, "exit_code", "status", "energy", "K_relative", "el_residual", "iterations", "directory"),
        rows,
    )
    run.results["sweep"] = {
        "parameter": sw.parameter,
        "entries": len(rows),
        "failed": sum(1 for r in rows if r[1] != 0),
    }

    def draw(ax):
        xs = list(range(len(rows)))
        ax.plot(xs, [r[3] for r in rows], "o-")
        ax.set_xticks(xs)
        ax.set_xticklabels([r[0] for r in rows], rotation=30)
        ax.set_xlabel(sw.parameter)
        ax.set_ylabel("energy")

    run.plot("sweep.png", draw)
    return worst


COMMANDS = {"solve": cmd_solve, "fiber": cmd_fiber, "check-hypotheses": cmd_check, "sweep": cmd_sweep}


def default_directory(cfg: RunConfig) -> Path:
    if cfg.output.directory:
        return Path(cfg.output.directory)
    return Path(os.environ.get(ENV_OUTPUT_ROOT, DEFAULT_OUTPUT_ROOT)) / cfg.command


def _execute(cfg: RunConfig, directory: Path):
    run = Run(cfg, directory)
    try:
        code = COMMANDS[cfg.command](run)
    except PohozaevError as exc:
        return run.finish(exit_code_for(exc), exc), run.results, str(exc)
    except (FloatingPointError, ValueError, OSError) as exc:
        return run.finish(1, exc), run.results, str(exc)
    return run.finish(code), run.results, ""


def run(cfg: RunConfig, directory: Optional[Path] = None) -> int:
    """Execute ``cfg`` and write its artifacts; returns the process exit code."""
    code, _, _ = _execute(cfg, Path(directory) if directory else default_directory(cfg))
    return code


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pohozaev", description="Ground states via the Pohozaev constraint.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("solve", "compute a ground state"),
        ("fiber", "tabulate the dilation fiber of a stored profile"),
        ("check-hypotheses", "run the hypothesis harness on the configured family"),
        ("sweep", "repeat solve over a list of values of one parameter"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="TOML run configuration")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key, e.g. --set grid.M=2048 (repeatable)")
        p.add_argument("--output", "-o", help="output directory")
        p.add_argument("--quiet", "-q", action="store_true", help="do not print the summary")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, list(args.overrides) + [f"command={json.dumps(args.command)}"])
    except PohozaevError as exc:
        issues = getattr(exc, "issues", [str(exc)])
        for msg in issues:
            print(f"{type(exc).__name__}: {msg}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    directory = Path(args.output) if args.output else default_directory(cfg)
    code, results, err = _execute(cfg, directory)
    if err:
        print(f"error: {err}", file=sys.stderr)
    if not args.quiet:
        print(json.dumps(_num(results), indent=2, sort_keys=True))
        print(f"artifacts: {directory}")
    return code


if __name__ == "__main__":
    sys.exit(main())
