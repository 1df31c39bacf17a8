"""Acceptance suite: one PASS/FAIL line per criterion.

    pytest tests/test_acceptance.py -v
    python3 tests/test_acceptance.py

Each test prints its verdict line (bypassing output capture) before asserting,
so a failing criterion still reports the measured numbers.
"""

import math
import sys
import time

import numpy as np
import pytest

from conftest import CLASSICAL_CUBIC_ENERGY
from pohozaev import calculus as calc
from pohozaev.core import DilationAction, Tolerances, pohozaev_identity_check, project_to_pohozaev
from pohozaev.grids import BoxGrid, GridFunction, RadialGrid, quad
from pohozaev.harness import MixtureSampler, check_family, check_instance, with_exponents
from pohozaev.nonlinearity import cubic, cubic_jump, power
from pohozaev.problems import Anisotropic, Classical, FractionalSum, GridSpec, ProblemInstance, build_family
from pohozaev.solver import solve, solve_discontinuous

ACT = DilationAction()
TS = (0.5, 1.0, 2.0, 3.7)

FAMILIES = {
    "fractional": ProblemInstance(FractionalSum((0.3, 0.3), 1), cubic()),
    "anisotropic": ProblemInstance(Anisotropic((1.6, 1.9), 2), cubic()),
    "classical": ProblemInstance(Classical(3), cubic()),
}


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def _rng(n, name):
    return np.random.default_rng([n, sum(map(ord, name))])


def _admissible(fam, sampler, rng, n):
    """Nonnegative draws with Phi > 0; amplitudes are raised until Phi turns positive."""
    out = []
    while len(out) < n:
        u, _ = sampler.draw(rng)
        v = np.maximum(u.values, 0.0)
        if not np.any(v > 0):
            continue
        for _ in range(20):
            w = GridFunction(u.grid, v)
            if fam.phi_eval(w) > 0:
                out.append(w)
                break
            v = 1.5 * v
    return out


# ---------------------------------------------------------------------------


def test_criterion_01_scaling_laws(capsys):
    t0 = time.time()
    worst_fun = worst_fiber = 0.0
    for name, inst in FAMILIES.items():
        fam = build_family(inst)
        sampler = MixtureSampler(inst.build_grid())
        rng = _rng(1, name)
        for _ in range(200):
            u, _ = sampler.draw(rng)
            v = fam.evaluate(u)
            for t in TS:
                vt = fam.evaluate(ACT(t, u))
                exp_psi = t ** np.asarray(v.lambdas) * v.psi
                err = np.abs(vt.psi - exp_psi) / np.abs(exp_psi)
                exp_phi = t**v.lambda_phi * v.phi
                err_phi = abs(vt.phi - exp_phi) / max(abs(exp_phi), 1e-300)
                worst_fun = max(worst_fun, float(err.max()), err_phi)
                # closed-form fiber against direct evaluation of I(u_t)
                gap = abs(float(v.h(t)) - vt.I) / (vt.J + abs(vt.phi))
                worst_fiber = max(worst_fiber, gap)
    dt = time.time() - t0
    ok = worst_fun <= 1e-6 and worst_fiber <= 1e-8 and dt < 30
    verdict(capsys, 1, ok, f"functionals {worst_fun:.2e} <= 1e-6, fiber {worst_fiber:.2e} <= 1e-8, {dt:.1f}s")
    assert ok


def test_criterion_02_03_projection_and_identity(capsys):
    t0 = time.time()
    tol = Tolerances(tol_K=1e-8)
    worst_K = worst_dom = worst_gap = 0.0
    bad_sign = 0
    for name, inst in FAMILIES.items():
        fam = build_family(inst)
        draws = _admissible(fam, MixtureSampler(inst.build_grid()), _rng(2, name), 100)
        for u in draws:
            vals = fam.evaluate(u)
            t_star, st = project_to_pohozaev(fam, u, tol, ACT, vals)
            # K recomputed on the dilated function
            vt = fam.evaluate(st.u)
            worst_K = max(worst_K, abs(vt.K) / vt.K_scale)
            scan = t_star * np.geomspace(1e-2, 1e2, 1000)
            h_star = float(vals.h(t_star))
            excess = float(np.max(vals.h(scan))) - h_star
            worst_dom = max(worst_dom, excess / abs(h_star))
            k = vals.K_along(scan)
            signs = np.sign(k[k != 0])
            bad_sign += int(np.count_nonzero(np.diff(signs)) != 1)
            worst_gap = max(worst_gap, pohozaev_identity_check(fam, st, tol))
    dt = time.time() - t0
    ok2 = worst_K <= 1e-8 and worst_dom <= 1e-12 and bad_sign == 0 and dt < 60
    verdict(capsys, 2, ok2, f"|K|/scale {worst_K:.2e} <= 1e-8, scan excess {worst_dom:.1e}, "
                            f"sign-change violations {bad_sign}, {dt:.1f}s")
    ok3 = worst_gap <= 1e-7
    verdict(capsys, 3, ok3, f"identity gap {worst_gap:.2e} <= 1e-7")
    assert ok2 and ok3


@pytest.mark.slow
def test_criterion_04_classical_oracle(capsys):
    t0 = time.time()
    inst = FAMILIES["classical"]
    d = []
    for M in (4096, 8192):
        rep = solve(inst.with_grid(GridSpec("radial", 20.0, M)))
        d.append(abs(rep.energy - CLASSICAL_CUBIC_ENERGY) / CLASSICAL_CUBIC_ENERGY)
    dt = time.time() - t0
    ok = d[0] <= 5e-3 and d[1] <= 0.5 * d[0]
    verdict(capsys, 4, ok, f"rel. discrepancy {d[0]:.2e} (M=4096) -> {d[1]:.2e} (M=8192), "
                           f"ratio {d[0] / d[1]:.2f} >= 2, {dt:.1f}s")
    assert ok


def _doubled_residual(u: GridFunction, s: float, spec) -> float:
    """Dual norm of 2(-Delta)^s u + u - f(u), computed directly by FFT."""
    g = u.grid
    M, h = g.shape[0], g.spacing[0]
    xi = 2 * np.pi * np.fft.fftfreq(M, h)
    sym = np.abs(xi) ** (2 * s)
    U = np.fft.fft(u.values)
    field = np.real(np.fft.ifft(2 * sym * U)) + u.values - spec.f(u.values)
    G = np.fft.fft(h * field)
    return math.sqrt(float(np.sum(np.abs(G) ** 2 / (h * (2 * sym + 1)))) / M)


@pytest.mark.slow
@pytest.mark.parametrize("s", [0.2, 0.3, 0.4])
def test_criterion_05_fractional_consistency(capsys, s):
    t0 = time.time()
    spec = power(2.0)
    energies, res = [], []
    for M in (8192, 16384):
        inst = ProblemInstance(FractionalSum((s, s), 1), spec, GridSpec("box", 20.0, M))
        rep = solve(inst)
        energies.append(rep.energy)
        res.append(_doubled_residual(rep.u, s, spec))
    drift = abs(energies[1] - energies[0]) / abs(energies[1])
    dt = time.time() - t0
    ok = res[0] <= 1e-5 and energies[0] > 0 and drift <= 1e-3 and dt < 120
    verdict(capsys, 5, ok, f"s={s}: EL residual {res[0]:.2e} <= 1e-5, E={energies[0]:.6f} > 0, "
                           f"doubling drift {drift:.1e} <= 1e-3, {dt:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_06_anisotropic_symmetry(capsys):
    t0 = time.time()
    sym = solve(ProblemInstance(Anisotropic((1.7, 1.7), 2), cubic()))
    swap = float(np.max(np.abs(sym.u.values - sym.u.values.T)))
    asym = solve(ProblemInstance(Anisotropic((1.6, 1.9), 2), cubic()))
    psi = asym.psi
    split = abs(psi[0] - psi[1]) / max(psi)
    dt = time.time() - t0
    ok = swap <= 1e-6 and split > 1e-3 and asym.K_relative <= 1e-6 and dt < 300
    verdict(capsys, 6, ok, f"swap {swap:.2e} <= 1e-6; p=(1.6,1.9): psi=({psi[0]:.4f}, {psi[1]:.4f}), "
                           f"K_rel {asym.K_relative:.1e} <= 1e-6 [{asym.status}], {dt:.1f}s")
    assert ok


def test_criterion_07_polya_szego(capsys):
    t0 = time.time()
    grids = {
        "box 1-D": (BoxGrid.centered(1, 20.0, 8192),
                    lambda u: [calc.fractional_seminorm(u, s, check=False) for s in (0.2, 0.3, 0.4)]),
        "box 2-D": (BoxGrid.centered(2, 10.0, 256),
                    lambda u: calc.anisotropic_energy(u, (1.6, 1.9), check=False)
                    + [calc.dirichlet_energy(u)]),
        "radial 3-D": (RadialGrid.uniform(3, 20.0, 4096), lambda u: [calc.dirichlet_energy(u)]),
    }
    ok = True
    parts = []
    for name, (grid, energies) in grids.items():
        sampler = MixtureSampler(grid)
        worst_ps = worst_eq = 0.0
        for u, _ in sampler.draws(_rng(7, name), 200, nonnegative=True):
            q = calc.symmetrize(u)
            for a, b in zip(energies(q), energies(u)):
                worst_ps = max(worst_ps, a / b - 1)
            for p in (1.0, 2.0, 4.0):
                a, b = quad(q, lambda x: np.abs(x) ** p), quad(u, lambda x: np.abs(x) ** p)
                worst_eq = max(worst_eq, abs(a / b - 1))
        ok = ok and worst_ps <= 1e-6 and worst_eq <= 1e-6
        parts.append(f"{name}: PS {worst_ps:.1e}, equimeasurability {worst_eq:.1e}")
    dt = time.time() - t0
    ok = ok and dt < 30
    verdict(capsys, 7, ok, "; ".join(parts) + f" (<= 1e-6), {dt:.1f}s")
    # the radial rearrangement mixes values within one cell: O(h^2) under refinement
    rates = []
    for M in (4096, 8192, 16384):
        grid = RadialGrid.uniform(3, 20.0, M)
        worst = 0.0
        for u, _ in MixtureSampler(grid).draws(_rng(7, "radial 3-D"), 20, nonnegative=True):
            q = calc.symmetrize(u)
            for p in (1.0, 2.0, 4.0):
                a, b = quad(q, lambda x: np.abs(x) ** p), quad(u, lambda x: np.abs(x) ** p)
                worst = max(worst, abs(a / b - 1))
        rates.append(f"M={M} {worst:.1e}")
    with capsys.disabled():
        print("              radial equimeasurability under refinement: " + ", ".join(rates))
    assert ok


@pytest.mark.slow
def test_criterion_08_discontinuous_inclusion(capsys):
    t0 = time.time()
    dr = solve_discontinuous(ProblemInstance(Classical(3), cubic_jump()))
    rel = np.array(dr.relative_violations)
    dt = time.time() - t0
    ok = rel[-1] < 1e-3 and bool(np.all(np.diff(rel) <= 0)) and dt < 300
    seq = ", ".join(f"{r:.1e}" for r in rel)
    verdict(capsys, 8, ok, f"relative violation along eps: [{seq}], final < 1e-3, non-increasing, {dt:.1f}s")
    assert ok


def _fd_worst(fam, pairs, eps=None):
    """Worst relative gap; the default step is the usual cbrt(machine eps) scaled to u and v."""
    worst = 0.0
    for u, v in pairs:
        d = float(np.sum(fam.gradient(u) * v.values))
        h = eps
        if h is None:
            h = np.finfo(float).eps ** (1 / 3) * np.max(np.abs(u.values)) / np.max(np.abs(v.values))
        up = GridFunction(u.grid, u.values + h * v.values)
        um = GridFunction(u.grid, u.values - h * v.values)
        fd = (fam.energy(up) - fam.energy(um)) / (2 * h)
        worst = max(worst, abs(fd - d) / abs(d))
    return worst


def _pairs(grid, rng, n=20, shift=None):
    sampler = MixtureSampler(grid)
    out = []
    for _ in range(n):
        (u, _), (v, _) = sampler.draw(rng), sampler.draw(rng)
        if shift is not None:
            u = GridFunction(grid, np.abs(u.values) + shift)
        out.append((u, v))
    return out


def test_criterion_09_gradients(capsys):
    parts, ok = [], True
    for name in ("fractional", "classical"):
        inst = FAMILIES[name]
        w = _fd_worst(build_family(inst), _pairs(inst.build_grid(), _rng(9, name)))
        ok = ok and w <= 1e-5
        parts.append(f"{name} {w:.1e}")
    # |d_i u|^p_i and |u|^p_1 with p < 2 are only C^(1,p-1); the smooth member of
    # the family is delta > 0 on states bounded away from zero
    inst = ProblemInstance(Anisotropic((1.6, 1.9), 2, 1e-2), cubic())
    w = _fd_worst(build_family(inst), _pairs(inst.build_grid(), _rng(9, "anisotropic"), shift=0.5))
    ok = ok and w <= 1e-5
    parts.append(f"anisotropic(delta=1e-2) {w:.1e}")
    verdict(capsys, 9, ok, ", ".join(parts) + " <= 1e-5")
    # raw family for the record: Hoelder-rate convergence, not part of the verdict
    raw = ProblemInstance(Anisotropic((1.6, 1.9), 2), cubic())
    pairs = _pairs(raw.build_grid(), _rng(9, "anisotropic"))
    fam = build_family(raw)
    e3, e5, e_std = _fd_worst(fam, pairs, 1e-3), _fd_worst(fam, pairs, 1e-5), _fd_worst(fam, pairs)
    with capsys.disabled():
        print(f"              anisotropic(delta=0) raw pairs, not in verdict: {e_std:.1e} at the standard step; "
              f"{e3:.1e} (eps=1e-3) -> {e5:.1e} (eps=1e-5), order {math.log10(e3 / e5) / 2:.2f}")
    assert e5 < e3
    assert ok


@pytest.mark.slow
def test_criterion_10_hypothesis_harness(capsys):
    t0 = time.time()
    parts, ok = [], True
    for name, inst in FAMILIES.items():
        rep = check_instance(inst, seed=10)
        ok = ok and rep.passed
        fails = ",".join(f"{e.name}({e.worst:.1e})" for e in rep.failures) or "none"
        parts.append(f"{name} {'pass' if rep.passed else 'fail'} [failures: {fails}]")
    # the shipped fractional family has equal exponents; permute a two-scale one
    inst = ProblemInstance(FractionalSum((0.2, 0.4), 1), power(2.0))
    fam = build_family(inst)
    bad = with_exponents(fam, lambdas=fam.lambdas[::-1])
    grid = inst.build_grid()
    corrupt = check_family(bad, grid, seed=10)
    caught = (not corrupt.passed) and all(e.witness is not None for e in corrupt.failures)
    ok = ok and caught
    parts.append(f"permuted lambdas -> {'fails' if caught else 'NOT caught'} "
                 f"[{','.join(e.name for e in corrupt.failures)}] with witness")
    dt = time.time() - t0
    verdict(capsys, 10, ok, "; ".join(parts) + f", {dt:.1f}s")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
