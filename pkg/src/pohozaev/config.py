"""Run configuration: TOML in, validated :class:`RunConfig` out, canonical TOML back.

Layout (every block but ``[problem]`` is optional)::

    command = "solve"            # solve | fiber | check-hypotheses | sweep
    seed = 0

    [problem]
    family = "fractional"        # fractional | anisotropic | classical
    N = 1
    s = [0.3, 0.3]               # fractional only
    p = [1.7, 1.7]               # anisotropic only
    delta = 0.0                  # anisotropic only
    nonlinearity = "cubic"       # builtin name, or an inline table of kind "table"
    jumps = [[1.0, 1.0]]         # extra jumps (a, h): f += h 1{s >= a}

    [grid]                       # defaults depend on the family
    kind = "box"
    R = 20.0
    M = 8192

    [solver]                     # any SolverOptions field
    [mollifier]                  # discontinuous nonlinearities
    [fiber]                      # fiber command
    [check]                      # check-hypotheses command
    [sweep]                      # sweep command
    [output]

Parsing collects every problem before raising: syntax errors and unknown
keys raise :class:`ParseError`, out-of-range values :class:`ValidationError`.
"""

from __future__ import annotations

import dataclasses
import math
import re
import sys
from dataclasses import dataclass, field, fields
from typing import List, Optional, Sequence, Tuple

import tomli_w

from .errors import NonadmissibleExponents, ParseError, ValidationError
from .nonlinearity import from_config, with_jumps
from .problems import DEFAULT_GRIDS, Anisotropic, Classical, FractionalSum, GridSpec, ProblemInstance, check_instance
from .solver import EPS_SCHEDULE, SolverOptions

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMANDS = ("solve", "fiber", "check-hypotheses", "sweep")
FAMILIES = ("fractional", "anisotropic", "classical")
GRID_KINDS = ("radial", "box")
FORMATS = ("csv", "json", "toml", "png")
DEFAULT_FORMATS = ("csv", "json", "toml", "png")


@dataclass(frozen=True)
class ProblemConfig:
    family: str
    N: int
    s: Tuple[float, ...] = ()
    p: Tuple[float, ...] = ()
    delta: float = 0.0
    nonlinearity: object = "cubic"
    jumps: Tuple[Tuple[float, float], ...] = ()


@dataclass(frozen=True)
class GridConfig:
    kind: str
    R: float
    M: int


@dataclass(frozen=True)
class MollifierConfig:
    eps_schedule: Tuple[float, ...] = EPS_SCHEDULE
    relative_to_gap: bool = True
    rel_tol: float = 1e-6


@dataclass(frozen=True)
class FiberConfig:
    profile: Optional[str] = None  # solution CSV; the solver's initial guess when absent
    t_min: float = 1e-2
    t_max: float = 1e2
    points: int = 1000


@dataclass(frozen=True)
class CheckConfig:
    samples: int = 200
    small_samples: int = 500


@dataclass(frozen=True)
class SweepConfig:
    parameter: str
    values: Tuple[object, ...]
    parallel: int = 1


@dataclass(frozen=True)
class OutputConfig:
    directory: Optional[str] = None  # POHOZAEV_OUTPUT_ROOT/<command> when absent
    formats: Tuple[str, ...] = DEFAULT_FORMATS


@dataclass(frozen=True)
class RunConfig:
    command: str
    problem: ProblemConfig
    grid: GridConfig
    solver: SolverOptions = field(default_factory=SolverOptions)
    mollifier: MollifierConfig = field(default_factory=MollifierConfig)
    fiber: FiberConfig = field(default_factory=FiberConfig)
    check: CheckConfig = field(default_factory=CheckConfig)
    sweep: Optional[SweepConfig] = None
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0

    def instance(self) -> ProblemInstance:
        return build_instance(self.problem, self.grid)

    def with_overrides(self, overrides: Sequence[str]) -> "RunConfig":
        return parse_config(emit_config(self), overrides)


# ---------------------------------------------------------------------------
# schema

_TOP = {"command", "seed", "problem", "grid", "solver", "mollifier", "fiber", "check", "sweep", "output"}
_SECTIONS = {
    "problem": {f.name for f in fields(ProblemConfig)},
    "grid": {f.name for f in fields(GridConfig)},
    "solver": {f.name for f in fields(SolverOptions)},
    "mollifier": {f.name for f in fields(MollifierConfig)},
    "fiber": {f.name for f in fields(FiberConfig)},
    "check": {f.name for f in fields(CheckConfig)},
    "sweep": {f.name for f in fields(SweepConfig)},
    "output": {f.name for f in fields(OutputConfig)},
}


def _locate(text: str, section: Optional[str], key: str) -> Tuple[int, int]:
    """1-based line and column of ``key`` inside ``[section]`` (0, 0 if not found)."""
    current = None
    header = re.compile(r"^\s*\[\s*([A-Za-z0-9_.-]+)\s*\]")
    for n, line in enumerate(text.splitlines(), 1):
        m = header.match(line)
        if m:
            current = m.group(1)
            continue
        m = re.match(r"^(\s*)" + re.escape(key) + r"\s*=", line)
        if m and current == section:
            return n, len(m.group(1)) + 1
        # dotted keys at top level, e.g. solver.max_iters = 5
        m = re.match(r"^(\s*)" + re.escape(f"{section}.{key}") + r"\s*=", line)
        if m and current is None:
            return n, len(m.group(1)) + 1
    if section is not None:
        for n, line in enumerate(text.splitlines(), 1):
            m = header.match(line)
            if m and m.group(1) == f"{section}.{key}":
                return n, line.index("[") + 1
    return 0, 0


def _where(text, section, key) -> str:
    line, col = _locate(text, section, key)
    sect = f"[{section}]" if section else "top level"
    return f"line {line}, column {col}: unknown key {key!r} in {sect}" if line else \
        f"unknown key {key!r} in {sect}"


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _set_dotted(raw: dict, path: str, value) -> None:
    parts = path.split(".")
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ParseError(f"override {path!r}: {p!r} is not a section")
    node[parts[-1]] = value


def apply_overrides(raw: dict, overrides: Sequence[str]) -> dict:
    """``section.key=value`` overrides; values use TOML syntax, bare words are strings."""
    issues = []
    for item in overrides:
        if "=" not in item:
            issues.append(f"override {item!r}: expected dotted.key=value")
            continue
        path, value = item.split("=", 1)
        path = path.strip()
        if not path:
            issues.append(f"override {item!r}: empty key")
            continue
        _set_dotted(raw, path, _parse_value(value.strip()))
    if issues:
        raise ParseError(issues)
    return raw


# ---------------------------------------------------------------------------
# validation helpers; each appends to ``issues`` and returns a usable value


def _number(issues, where, value, lo=None, hi=None, integer=False, lo_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        issues.append(f"{where}: expected a number, got {value!r}")
        return None
    if integer and (not isinstance(value, int) and not float(value).is_integer()):
        issues.append(f"{where}: expected an integer, got {value!r}")
        return None
    v = int(value) if integer else float(value)
    if not math.isfinite(v):
        issues.append(f"{where}: must be finite")
        return None
    if lo is not None and (v <= lo if lo_open else v < lo):
        issues.append(f"{where}: must be {'>' if lo_open else '>='} {lo:g} (got {v:g})")
    if hi is not None and v > hi:
        issues.append(f"{where}: must be <= {hi:g} (got {v:g})")
    return v


def _choice(issues, where, value, options):
    if value not in options:
        issues.append(f"{where}: must be one of {', '.join(options)} (got {value!r})")
        return None
    return value


def _float_list(issues, where, value, lo=None, hi=None):
    if not isinstance(value, list):
        issues.append(f"{where}: expected a list of numbers")
        return ()
    out = []
    for i, x in enumerate(value):
        v = _number(issues, f"{where}[{i}]", x)
        if v is None:
            continue
        if lo is not None and not v > lo:
            issues.append(f"{where}[{i}]: must be > {lo:g} (got {v:g})")
        if hi is not None and not v < hi:
            issues.append(f"{where}[{i}]: must be < {hi:g} (got {v:g})")
        out.append(v)
    return tuple(out)


def _problem(issues, raw: dict) -> Optional[ProblemConfig]:
    fam = _choice(issues, "problem.family", raw.get("family"), FAMILIES)
    if "N" not in raw:
        issues.append("problem.N: required")
        N = None
    else:
        N = _number(issues, "problem.N", raw["N"], lo=1, integer=True)
    s = _float_list(issues, "problem.s", raw.get("s", []), lo=0.0, hi=1.0)
    p = _float_list(issues, "problem.p", raw.get("p", []), lo=1.0)
    delta = _number(issues, "problem.delta", raw.get("delta", 0.0), lo=0.0)
    nonlin = raw.get("nonlinearity", "cubic")
    try:
        from_config(nonlin)
    except (ValueError, KeyError, TypeError) as exc:
        issues.append(f"problem.nonlinearity: {exc}")
    jumps = []
    for i, j in enumerate(raw.get("jumps", [])):
        if not (isinstance(j, list) and len(j) == 2):
            issues.append(f"problem.jumps[{i}]: expected [a, h]")
            continue
        a = _number(issues, f"problem.jumps[{i}][0]", j[0], lo=0.0, lo_open=True)
        h = _number(issues, f"problem.jumps[{i}][1]", j[1])
        if a is not None and h is not None:
            jumps.append((a, h))
    if fam == "fractional":
        if not s:
            issues.append("problem.s: the fractional family needs a non-empty s list")
        elif list(s) != sorted(s):
            issues.append("problem.s: must be nondecreasing (s_1 <= ... <= s_n)")
        if p:
            issues.append("problem.p: only used by the anisotropic family")
        if N is not None and s and not N > 2 * max(s):
            issues.append(f"problem: N > 2*s_n required (N={N}, s_n={max(s):g})")
    elif fam == "anisotropic":
        if N is not None and len(p) != N:
            issues.append(f"problem.p: one exponent per axis required ({len(p)} given, N={N})")
        if s:
            issues.append("problem.s: only used by the fractional family")
    elif fam == "classical":
        if s or p:
            issues.append("problem: s and p are not used by the classical family")
        if N is not None and N < 3:
            issues.append(f"problem.N: N >= 3 required for the classical family (N={N})")
    if None in (fam, N, delta):
        return None
    return ProblemConfig(fam, N, s, p, delta, nonlin, tuple(jumps))


def _grid(issues, raw: dict, fam: Optional[str]) -> Optional[GridConfig]:
    base = DEFAULT_GRIDS.get(fam, GridSpec())
    kind = _choice(issues, "grid.kind", raw.get("kind", base.kind), GRID_KINDS)
    R = _number(issues, "grid.R", raw.get("R", base.R), lo=0.0, lo_open=True)
    M = _number(issues, "grid.M", raw.get("M", base.M), lo=16, integer=True)
    if M is not None and kind == "box" and M % 2:
        issues.append(f"grid.M: box grids need an even number of points (got {M})")
    if None in (kind, R, M):
        return None
    return GridConfig(kind, R, M)


def _solver(issues, raw: dict) -> SolverOptions:
    kwargs = {}
    for f in fields(SolverOptions):
        if f.name not in raw:
            continue
        v = raw[f.name]
        default = f.default
        if isinstance(default, bool) or f.name == "polish":
            if not isinstance(v, bool):
                issues.append(f"solver.{f.name}: expected true or false")
                continue
        elif isinstance(default, int):
            v = _number(issues, f"solver.{f.name}", v, lo=0, integer=True)
        elif isinstance(default, float):
            v = _number(issues, f"solver.{f.name}", v)
        elif isinstance(default, str) and not isinstance(v, str):
            issues.append(f"solver.{f.name}: expected a string")
            continue
        if v is not None:
            kwargs[f.name] = v
    try:
        return SolverOptions(**kwargs)
    except ValueError as exc:
        issues.append(f"solver: {exc}")
        return SolverOptions()


def _mollifier(issues, raw: dict) -> MollifierConfig:
    sched = _float_list(issues, "mollifier.eps_schedule", raw.get("eps_schedule", list(EPS_SCHEDULE)), lo=0.0)
    if sched and any(b >= a for a, b in zip(sched, sched[1:])):
        issues.append("mollifier.eps_schedule: must be strictly decreasing")
    if not sched:
        issues.append("mollifier.eps_schedule: must not be empty")
    rel = raw.get("relative_to_gap", True)
    if not isinstance(rel, bool):
        issues.append("mollifier.relative_to_gap: expected true or false")
        rel = True
    tol = _number(issues, "mollifier.rel_tol", raw.get("rel_tol", 1e-6), lo=0.0, lo_open=True)
    return MollifierConfig(sched or EPS_SCHEDULE, rel, tol if tol is not None else 1e-6)


def _fiber(issues, raw: dict) -> FiberConfig:
    prof = raw.get("profile")
    if prof is not None and not isinstance(prof, str):
        issues.append("fiber.profile: expected a path")
        prof = None
    t_min = _number(issues, "fiber.t_min", raw.get("t_min", 1e-2), lo=0.0, lo_open=True)
    t_max = _number(issues, "fiber.t_max", raw.get("t_max", 1e2), lo=0.0, lo_open=True)
    pts = _number(issues, "fiber.points", raw.get("points", 1000), lo=2, hi=10**6, integer=True)
    if t_min is not None and t_max is not None and not t_max > t_min:
        issues.append("fiber: t_max must exceed t_min")
    return FiberConfig(prof, t_min or 1e-2, t_max or 1e2, pts or 1000)


def _check(issues, raw: dict) -> CheckConfig:
    n = _number(issues, "check.samples", raw.get("samples", 200), lo=1, integer=True)
    m = _number(issues, "check.small_samples", raw.get("small_samples", 500), lo=1, integer=True)
    return CheckConfig(n or 200, m or 500)


def _sweep(issues, raw: Optional[dict], needed: bool) -> Optional[SweepConfig]:
    if raw is None:
        if needed:
            issues.append("sweep: the sweep command needs a [sweep] block")
        return None
    param = raw.get("parameter")
    if not isinstance(param, str) or "." not in param:
        issues.append("sweep.parameter: expected a dotted path such as 'grid.M'")
    elif param.split(".")[0] not in ("problem", "grid", "solver", "mollifier"):
        issues.append("sweep.parameter: must point into problem, grid, solver or mollifier")
    vals = raw.get("values")
    if not isinstance(vals, list) or not vals:
        issues.append("sweep.values: expected a non-empty list")
        vals = []
    par = _number(issues, "sweep.parallel", raw.get("parallel", 1), lo=1, hi=64, integer=True)
    if not isinstance(param, str):
        return None
    return SweepConfig(param, tuple(tuple(v) if isinstance(v, list) else v for v in vals), par or 1)


def _output(issues, raw: dict) -> OutputConfig:
    d = raw.get("directory")
    if d is not None and not isinstance(d, str):
        issues.append("output.directory: expected a path")
        d = None
    fmts = raw.get("formats", list(DEFAULT_FORMATS))
    if not isinstance(fmts, list) or any(f not in FORMATS for f in fmts):
        issues.append(f"output.formats: expected a list drawn from {', '.join(FORMATS)}")
        fmts = list(DEFAULT_FORMATS)
    return OutputConfig(d, tuple(f for f in FORMATS if f in fmts))


def build_instance(pc: ProblemConfig, gc: GridConfig) -> ProblemInstance:
    spec = with_jumps(from_config(pc.nonlinearity), pc.jumps)
    if pc.family == "fractional":
        fam = FractionalSum(pc.s, pc.N)
    elif pc.family == "anisotropic":
        fam = Anisotropic(pc.p, pc.N, pc.delta)
    else:
        fam = Classical(pc.N)
    return ProblemInstance(fam, spec, GridSpec(gc.kind, gc.R, gc.M))


# ---------------------------------------------------------------------------
# entry points


def parse_config(text: str, overrides: Sequence[str] = ()) -> RunConfig:
    """Parse and validate; raises with every issue found, not just the first."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError([f"TOML syntax error: {exc}"]) from None
    raw = apply_overrides(raw, overrides)

    unknown = []
    for key in raw:
        if key not in _TOP:
            unknown.append(_where(text, None, key))
    for sect, allowed in _SECTIONS.items():
        block = raw.get(sect)
        if block is None:
            continue
        if not isinstance(block, dict):
            unknown.append(f"{sect}: expected a section")
            continue
        for key in block:
            if key not in allowed:
                unknown.append(_where(text, sect, key))
    if unknown:
        raise ParseError(unknown)

    issues: List[str] = []
    command = _choice(issues, "command", raw.get("command", "solve"), COMMANDS)
    seed = _number(issues, "seed", raw.get("seed", 0), lo=0, integer=True)
    if "problem" not in raw:
        issues.append("problem: a [problem] block is required")
        problem = None
    else:
        problem = _problem(issues, raw["problem"])
    grid = _grid(issues, raw.get("grid", {}), problem.family if problem else None)
    solver = _solver(issues, raw.get("solver", {}))
    mollifier = _mollifier(issues, raw.get("mollifier", {}))
    fiber = _fiber(issues, raw.get("fiber", {}))
    check = _check(issues, raw.get("check", {}))
    sweep = _sweep(issues, raw.get("sweep"), command == "sweep")
    output = _output(issues, raw.get("output", {}))

    if problem is not None and grid is not None and not issues:
        try:
            check_instance(build_instance(problem, grid))
        except (NonadmissibleExponents, ValueError) as exc:
            issues.append(f"problem: {exc}")
    if issues:
        raise ValidationError(issues)
    return RunConfig(command, problem, grid, solver, mollifier, fiber, check, sweep, output, seed)


def _plain(obj):
    if isinstance(obj, tuple):
        return [_plain(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    return obj


def config_to_dict(cfg: RunConfig) -> dict:
    """Nested plain dict with every default filled in; ``None`` entries are dropped."""
    out = {"command": cfg.command, "seed": cfg.seed}
    for name in ("problem", "grid", "solver", "mollifier", "fiber", "check", "sweep", "output"):
        block = getattr(cfg, name)
        if block is None:
            continue
        d = {f.name: _plain(getattr(block, f.name)) for f in fields(block)}
        out[name] = {k: v for k, v in d.items() if v is not None}
    return out


def emit_config(cfg: RunConfig) -> str:
    """Canonical TOML: fixed key order, all defaults explicit."""
    return tomli_w.dumps(config_to_dict(cfg))


def load_config(path: str, overrides: Sequence[str] = ()) -> RunConfig:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError([f"{path}: not UTF-8 ({exc})"]) from None
    return parse_config(text, overrides)


def replace_config(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, **changes)
