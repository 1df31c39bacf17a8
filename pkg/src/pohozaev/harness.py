"""Sampled checks of the structural hypotheses behind a functional family.

Each check draws seeded random grid functions, evaluates one hypothesis on
all of them and records the worst case.  Every entry is normalised to the
form ``worst <= threshold``; ``margin = threshold - worst``.  Failing entries
carry a witness that can be serialised and replayed through the sampler.

The weak-convergence hypotheses F5 and F6 cannot be decided on a finite grid.
They are exercised on explicit sequences and flagged as surrogates; the
report's verdict ignores them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .calculus import symmetrize
from .core import DilationAction, FunctionalFamily
from .grids import BoxGrid, GridFunction, RadialGrid, is_radially_nonincreasing, quad, resample

HARD = ("X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "F1", "F2", "F3", "F4")
SURROGATES = ("F5", "F6")
SCALING_T = (0.5, 1.0, 2.0, 3.7)
TINY = 1e-300


@dataclass(frozen=True)
class HypothesisEntry:
    name: str
    description: str
    samples: int
    worst: float
    threshold: float
    passed: bool
    surrogate: bool = False
    witness: Optional[dict] = None
    detail: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.threshold - self.worst

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "samples": self.samples,
            "worst": _num(self.worst),
            "threshold": _num(self.threshold),
            "margin": _num(self.margin),
            "passed": self.passed,
            "surrogate": self.surrogate,
            "witness": self.witness,
            "detail": _clean(self.detail),
        }


@dataclass(frozen=True)
class HypothesisReport:
    family: str
    seed: int
    entries: Tuple[HypothesisEntry, ...]

    @property
    def passed(self) -> bool:
        """True when every non-surrogate entry passes."""
        return all(e.passed for e in self.entries if not e.surrogate)

    @property
    def failures(self) -> List[HypothesisEntry]:
        return [e for e in self.entries if not e.passed and not e.surrogate]

    def entry(self, name: str) -> HypothesisEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "seed": self.seed,
            "passed": self.passed,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"family {self.family}  seed {self.seed}"]
        for e in self.entries:
            tag = "PASS" if e.passed else "FAIL"
            kind = " (surrogate)" if e.surrogate else ""
            lines.append(
                f"  {e.name:<3} {tag}{kind}  worst {e.worst:.3e}  threshold {e.threshold:.1e}  "
                f"n={e.samples}  {e.description}"
            )
            if e.witness is not None and not e.passed:
                lines.append(f"      witness: {json.dumps(_clean(e.witness), sort_keys=True)}")
        lines.append("verdict: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _num(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


# ---------------------------------------------------------------------------
# sampler


@dataclass(frozen=True)
class MixtureSampler:
    """Random mixtures of radial Gaussians on ``grid``.

    Widths and amplitudes are log-uniform; components after the first are
    negative with probability ``negative_prob``.  On box grids each component
    is centred at a random offset of at most ``jitter`` per axis.
    """

    grid: object
    components: Tuple[int, int] = (1, 3)
    width: Tuple[float, float] = (0.3, 2.0)
    amplitude: Tuple[float, float] = (0.2, 3.0)
    negative_prob: float = 0.25
    jitter: float = 1.0

    def draw(self, rng: np.random.Generator) -> Tuple[GridFunction, dict]:
        k = int(rng.integers(self.components[0], self.components[1] + 1))
        comps = []
        for j in range(k):
            a = math.exp(rng.uniform(math.log(self.amplitude[0]), math.log(self.amplitude[1])))
            w = math.exp(rng.uniform(math.log(self.width[0]), math.log(self.width[1])))
            if j > 0 and rng.random() < self.negative_prob:
                a = -a
            if isinstance(self.grid, BoxGrid):
                c = rng.uniform(-self.jitter, self.jitter, self.grid.dim).tolist()
            else:
                c = [0.0]
            comps.append({"amplitude": a, "width": w, "centre": c})
        params = {"components": comps}
        return self.build(params), params

    def build(self, params: dict) -> GridFunction:
        g = self.grid
        if isinstance(g, RadialGrid):
            dist2 = lambda c: g.radii**2
        else:
            mesh = np.meshgrid(*[g.coords(i) for i in range(g.dim)], indexing="ij")
            dist2 = lambda c: sum((x - ci) ** 2 for x, ci in zip(mesh, c))
        out = np.zeros(g.shape)
        for comp in params["components"]:
            out = out + comp["amplitude"] * np.exp(-dist2(comp["centre"]) / (2.0 * comp["width"] ** 2))
        return GridFunction(g, out)

    def draws(self, rng: np.random.Generator, n: int, nonnegative: bool = False):
        """``n`` draws; with ``nonnegative`` the positive part, skipping empty ones."""
        out = []
        while len(out) < n:
            u, params = self.draw(rng)
            if nonnegative:
                v = np.maximum(u.values, 0.0)
                if not np.any(v > 0):
                    continue
                u = GridFunction(u.grid, v)
                params = dict(params, positive_part=True)
            out.append((u, params))
        return out


def _rngs(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _entry(name, description, n, worst, threshold, witness=None, surrogate=False, **detail):
    worst = float(worst)
    passed = bool(math.isfinite(worst) and worst <= threshold)
    return HypothesisEntry(
        name, description, int(n), worst, float(threshold), passed, surrogate,
        None if passed else _clean(witness), detail,
    )


# ---------------------------------------------------------------------------
# scalings: X1 X2 X3 X4 X5


def check_scalings(
    fam: FunctionalFamily,
    act: DilationAction,
    sampler: MixtureSampler,
    seed: int = 0,
    n: int = 200,
    ts: Sequence[float] = SCALING_T,
    tol: float = 1e-8,
) -> List[HypothesisEntry]:
    rng_a, rng_b = _rngs(seed, 2)
    draws = sampler.draws(rng_a, n)
    lam = np.asarray(fam.lambdas)
    worst1 = worst2 = 0.0
    wit1 = wit2 = None
    phi_skipped = 0
    est_psi: List[np.ndarray] = []
    est_phi: List[float] = []
    for k, (u, params) in enumerate(draws):
        v0 = fam.evaluate(u)
        for t in ts:
            vt = fam.evaluate(act(t, u))
            expect = t**lam * v0.psi
            err = np.abs(vt.psi - expect) / np.maximum(np.abs(expect), TINY)
            i = int(np.argmax(err))
            if err[i] > worst1:
                worst1 = float(err[i])
                wit1 = {"sample": k, "params": params, "t": t, "psi_index": i,
                        "expected": expect[i], "observed": vt.psi[i]}
            expect_phi = t**fam.lambda_phi * v0.phi
            if abs(v0.phi) > 1e-8 * max(v0.J, TINY):
                e = abs(vt.phi - expect_phi) / abs(expect_phi)
                if e > worst2:
                    worst2 = e
                    wit2 = {"sample": k, "params": params, "t": t, "expected": expect_phi, "observed": vt.phi}
            elif t == ts[0]:
                phi_skipped += 1
        # exponents measured from a doubling, independent of the declared ones
        v2 = fam.evaluate(act(2.0, u))
        with np.errstate(divide="ignore", invalid="ignore"):
            est_psi.append(np.log(v2.psi / v0.psi) / math.log(2.0))
        if abs(v0.phi) > 1e-8 * max(v0.J, TINY):
            est_phi.append(math.log(abs(v2.phi / v0.phi)) / math.log(2.0))

    entries = [
        _entry("X1", "psi_i(u_t) = t^lambda_i psi_i(u)", len(draws), worst1, tol, wit1,
               t_values=list(ts)),
        _entry("X2", "Phi(u_t) = t^lambda_Phi Phi(u)", len(draws) - phi_skipped, worst2, tol, wit2,
               t_values=list(ts), skipped_near_zero=phi_skipped),
        _check_exponents(fam, est_psi, est_phi),
        _check_zero_dilation(fam, act, draws),
        _check_continuity(fam, act, draws[: min(len(draws), 20)], rng_b),
    ]
    return entries


def _check_exponents(fam, est_psi, est_phi) -> HypothesisEntry:
    # re-derived here: the constructor's own validation may have been disabled
    lam = [float(x) for x in fam.lambdas]
    declared = min(max(lam), fam.lambda_phi - max(lam))
    psi_hat = np.nanmedian(np.array(est_psi), axis=0) if est_psi else np.full(len(lam), np.nan)
    phi_hat = float(np.median(est_phi)) if est_phi else float("nan")
    measured = min(float(np.max(psi_hat)), phi_hat - float(np.max(psi_hat)))
    margin = min(declared, measured)
    worst = -margin if math.isfinite(margin) else float("inf")
    witness = {"lambdas": lam, "lambda_phi": fam.lambda_phi,
               "measured_lambdas": psi_hat.tolist(), "measured_lambda_phi": phi_hat}
    return _entry("X3", "0 < max lambda_i < lambda_Phi (declared and measured)", len(est_psi),
                  worst, 0.0 - 1e-12, witness, measured_lambdas=psi_hat.tolist(),
                  measured_lambda_phi=phi_hat)


def _check_zero_dilation(fam, act, draws) -> HypothesisEntry:
    worst, wit = 0.0, None
    for k, (u, params) in enumerate(draws):
        z = act(0.0, u)
        m = float(np.max(np.abs(z.values))) + abs(fam.norm(z) if fam.norm else 0.0)
        if m > worst:
            worst, wit = m, {"sample": k, "params": params, "max_abs": m}
    return _entry("X4", "u_0 = 0", len(draws), worst, 0.0, wit)


def _decay_rate(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _check_continuity(fam, act, draws, rng) -> HypothesisEntry:
    """Discrete modulus of t -> u_t at t = 1, and decay of |u_t| as t -> 0+.

    Near t = 0 the norm falls like a power of t that can be small (the
    exponents lambda_i / 2 or so), so the test asks for strict decrease with
    a positive fitted rate rather than a fixed end value.
    """
    eps = (1e-1, 1e-2, 1e-3, 1e-4)
    small = 10.0 ** -np.arange(1, 17, 3)
    worst, wit = 0.0, None
    moduli, rates = [], []
    norm = fam.norm
    for k, (u, params) in enumerate(draws):
        nu = norm(u)
        if not nu > 0:
            continue
        d = []
        for e in eps:
            back = resample(act(1.0 + e, u), u.grid)
            d.append(norm(GridFunction(u.grid, back.values - u.values)) / nu)
        z = np.array([norm(act(t, u)) / nu for t in small])
        rate = _decay_rate(small, z)
        moduli.append(d)
        rates.append(rate)
        bad = d[-1]
        if not (np.all(np.diff(d) < 0) and np.all(np.diff(z) < 0) and rate > 0):
            bad = float("inf")
        if bad > worst:
            worst, wit = bad, {"sample": k, "params": params, "modulus_at_1": d,
                               "norm_near_0": z.tolist(), "rate_near_0": rate}
    return _entry("X5", "t -> u_t continuous (modulus at t=1, decay as t->0+)", len(moduli),
                  worst, 1e-2, wit, eps=list(eps),
                  median_modulus_at_1=np.median(moduli, axis=0).tolist() if moduli else [],
                  min_rate_near_0=min(rates) if rates else float("nan"))


# ---------------------------------------------------------------------------
# cone: X6 X7 X8


def _integral_scale(u: GridFunction) -> float:
    return quad(u, np.square)


def check_cone(
    fam: FunctionalFamily,
    Q: Callable = symmetrize,
    sampler: MixtureSampler = None,
    seed: int = 0,
    n: int = 200,
    tol: float = 1e-6,
    act: DilationAction = DilationAction(),
    powers: Sequence[float] = (2.0,),
) -> List[HypothesisEntry]:
    (rng,) = _rngs(seed + 1, 1)
    draws = sampler.draws(rng, n, nonnegative=True)
    w6 = w7 = w8 = 0.0
    wit6 = wit7 = wit8 = None
    equi = {f"p={p:g}": 0.0 for p in powers}
    for k, (u, params) in enumerate(draws):
        q = Q(u)
        v, vq = fam.evaluate(u), fam.evaluate(q)
        rel = (vq.psi - v.psi) / np.maximum(v.psi, TINY)
        i = int(np.argmax(rel))
        if rel[i] > w6:
            w6 = float(rel[i])
            wit6 = {"sample": k, "params": params, "psi_index": i, "psi_u": v.psi[i], "psi_Qu": vq.psi[i]}
        # equality expected from equimeasurability; the hypothesis needs only >=
        scale = max(abs(v.phi), _integral_scale(u), TINY)
        gap = abs(vq.phi - v.phi) / scale
        if gap > w7:
            w7 = gap
            wit7 = {"sample": k, "params": params, "phi_u": v.phi, "phi_Qu": vq.phi}
        for p in powers:
            a = quad(u, lambda x: np.abs(x) ** p)
            b = quad(q, lambda x: np.abs(x) ** p)
            equi[f"p={p:g}"] = max(equi[f"p={p:g}"], abs(b - a) / max(a, TINY))
        # X8: the cone is closed under dilation
        for t in (0.5, 2.0, 3.0):
            qt = act(t, q)
            ok = qt.monotone_flag and is_radially_nonincreasing(qt)
            if isinstance(q.grid, RadialGrid):
                ok = ok and is_radially_nonincreasing(resample(qt, q.grid))
            if not ok:
                w8 = 1.0
                wit8 = {"sample": k, "params": params, "t": t}
    return [
        _entry("X6", "psi_i(Q u) <= psi_i(u) on X+", len(draws), w6, tol, wit6),
        _entry("X7", "Phi(Q u) = Phi(u) on X+ (equimeasurability)", len(draws), w7, tol, wit7,
               equimeasurability=equi),
        _entry("X8", "dilations keep X^r (monotone flag and cone test)", len(draws), w8, 0.0, wit8),
    ]


# ---------------------------------------------------------------------------
# structural conditions: F1 F2 and surrogates F3..F6


def check_structure(fam: FunctionalFamily, sampler: MixtureSampler, seed: int = 0, n: int = 200):
    (rng,) = _rngs(seed + 2, 1)
    draws = sampler.draws(rng, n)
    zero = GridFunction(sampler.grid, np.zeros(sampler.grid.shape))
    v0 = fam.evaluate(zero)

    # F1: Phi(0) = 0 and some u has Phi(u) > 0 (amplitudes raised if needed)
    found = None
    for k, (u, params) in enumerate(draws):
        for a in 2.0 ** np.arange(0, 12):
            if fam.phi_eval(GridFunction(u.grid, a * u.values)) > 0:
                found = {"sample": k, "params": params, "amplitude_factor": float(a)}
                break
        if found:
            break
    f1 = _entry("F1", "Phi(0) = 0 and Phi(u) > 0 for some u", len(draws),
                abs(v0.phi) if found else float("inf"), 0.0,
                {"phi_zero": v0.phi, "positive_found": found is not None}, positive_example=found)

    # F2: psi_i >= 0, J(u) = 0 only at u = 0
    worst, wit = abs(v0.J), {"J_zero": v0.J}
    for k, (u, params) in enumerate(draws):
        v = fam.evaluate(u)
        scale = max(float(np.sum(np.abs(v.psi))), TINY)
        bad = max(float(-np.min(v.psi)) / scale, 0.0)
        if not v.J > 0:
            bad = float("inf")
        if bad > worst:
            worst, wit = bad, {"sample": k, "params": params, "psi": v.psi.tolist()}
    f2 = _entry("F2", "psi_i >= 0 and J(u) = 0 iff u = 0", len(draws), worst, 0.0, wit)
    return [f1, f2]


def check_compactness_surrogates(
    fam: FunctionalFamily,
    sampler: MixtureSampler,
    seed: int = 0,
    n_small: int = 500,
    radius: float = 1e-2,
    act: DilationAction = DilationAction(),
) -> List[HypothesisEntry]:
    rng_a, rng_b = _rngs(seed + 3, 2)
    norm = fam.norm

    # F3: K > 0 on a small sphere, radii log-uniform in [radius/100, radius]
    worst, wit = -float("inf"), None
    draws = sampler.draws(rng_a, n_small)
    for k, (u, params) in enumerate(draws):
        rho = radius * 10 ** rng_a.uniform(-2, 0)
        a = rho / norm(u)
        v = fam.evaluate(GridFunction(u.grid, a * u.values))
        stat = -v.K / max(v.K_scale, TINY)
        if stat > worst:
            worst, wit = stat, {"sample": k, "params": params, "norm": rho, "K": v.K}
    f3 = _entry("F3", f"K(u) > 0 for 0 < |u| <= {radius:g}", len(draws), worst, -1e-14, wit)

    # F4: J(u_k) -> 0 with Phi(u_k) >= 0 forces |u_k| -> 0.  Amplitude decay
    # would make Phi negative, so the sequence is built by dilation t_k -> 0
    base = _positive_phi_draws(fam, sampler, rng_b, 10)
    ts = 2.0 ** -np.arange(0, 61, 4)
    rates, worst4, wit4 = [], -float("inf"), None
    bounded = []
    for k, (u, params) in enumerate(base):
        J = np.array([fam.evaluate(act(t, u)).J for t in ts])
        nrm = np.array([norm(act(t, u)) for t in ts])
        rate = _decay_rate(J, nrm)
        rates.append(rate)
        bounded.append(float(np.max(nrm / (1.0 + J))))
        # |u_k| ~ C J^rate with rate > 0 and strictly decreasing norms
        bad = -rate if np.all(np.diff(nrm) < 0) else float("inf")
        if bad > worst4:
            worst4, wit4 = bad, {"sample": k, "params": params, "J": J.tolist(), "norm": nrm.tolist()}
    f4 = _entry("F4", "Phi >= 0 and J(u_k) -> 0 give |u_k| -> 0 (fitted rate > 0)", len(base),
                worst4, -1e-3, wit4,
                fitted_rate_min=min(rates) if rates else float("nan"),
                norm_over_1_plus_J_max=max(bounded) if bounded else float("nan"))

    # F6 holds on all of X; smooth samples keep the cross term negligible
    return [f3, f4, _surrogate_f5(fam, base, act), _surrogate_f6(fam, sampler.draws(rng_b, 10))]


def _positive_phi_draws(fam, sampler, rng, n):
    out = []
    for _ in range(50 * n):
        if len(out) == n:
            break
        u, params = sampler.draw(rng)
        u = GridFunction(u.grid, np.maximum(u.values, 0.0))
        for a in 2.0 ** np.arange(0, 12):
            ua = GridFunction(u.grid, a * u.values)
            if fam.phi_eval(ua) > 0:
                out.append((ua, dict(params, positive_part=True, amplitude_factor=float(a))))
                break
    return out


def _surrogate_f5(fam, base, act) -> HypothesisEntry:
    """Spreading with L2 normalisation, u_k = k^(-N/2) u(x/k): weakly null in X^r."""
    worst, wit = -float("inf"), None
    ks = 2.0 ** np.arange(1, 9)
    for j, (u, params) in enumerate(base):
        q = symmetrize(u) if isinstance(u.grid, RadialGrid) else u
        N = u.grid.dim
        phis = [fam.phi_eval(GridFunction(act(k, q).grid, k ** (-N / 2) * q.values)) for k in ks]
        scale = max(_integral_scale(q), TINY)
        stat = max(phis[-3:]) / scale  # limsup against Phi(0) = 0
        if stat > worst:
            worst, wit = stat, {"sample": j, "params": params, "phi": phis}
    return _entry("F5", "limsup Phi(u_k) <= Phi(lim) on a spreading sequence", len(base),
                  worst, 1e-6, wit, surrogate=True)


def _escaping_bump(g, j: int) -> np.ndarray:
    """A unit bump moved a distance ``j`` from the origin (a shell on radial grids)."""
    if isinstance(g, RadialGrid):
        return np.exp(-((g.radii - j) ** 2) / 0.5)
    mesh = np.meshgrid(*[g.coords(i) for i in range(g.dim)], indexing="ij")
    return np.exp(-((mesh[0] - j) ** 2 + sum(x**2 for x in mesh[1:])) / 0.5)


def _surrogate_f6(fam, draws) -> HypothesisEntry:
    """Two weakly convergent sequences checked against their limits.

    Oscillation: u_k = u + k^-1 phi sin(k x_1) tends weakly to u; only the
    tail of the sequence is comparable with the limit, so the last term is
    used.  Escaping bump: tends weakly (and pointwise) to 0.
    """
    worst, wit = -float("inf"), None
    g = draws[0][0].grid
    if isinstance(g, RadialGrid):
        x, h, far = g.radii, g.radii[1] - g.radii[0], g.R
    else:
        x, h, far = np.meshgrid(*[g.coords(i) for i in range(g.dim)], indexing="ij")[0], g.spacing[0], -g.origin[0]
    ks = np.geomspace(math.pi / (64 * h), math.pi / (4 * h), 6)
    for j, (u, params) in enumerate(draws):
        envelope = u.values / max(float(np.max(np.abs(u.values))), TINY)
        psi_lim = fam.evaluate(u).psi
        seq = np.array([fam.evaluate(GridFunction(g, u.values + envelope * np.sin(k * x) / k)).psi for k in ks])
        stat = float(np.max((psi_lim - seq[-1]) / np.maximum(psi_lim, TINY)))
        if stat > worst:
            worst, wit = stat, {"sample": j, "params": params, "k": ks.tolist(),
                                "psi_limit": psi_lim.tolist(), "psi_sequence": seq.tolist()}
    bumps = np.array([fam.evaluate(GridFunction(g, _escaping_bump(g, d))).psi
                      for d in np.linspace(0.0, 0.5 * far, 6)])
    stat = float(np.max(-bumps.min(axis=0)))  # the limit is 0 and psi(0) = 0
    if stat > worst:
        worst, wit = stat, {"escaping_bump_psi": bumps.tolist()}
    return _entry("F6", "psi_i(lim) <= liminf psi_i(u_k) (oscillation tail, escaping bump)", len(draws),
                  worst, 1e-6, wit, surrogate=True)


# ---------------------------------------------------------------------------
# driver


def check_family(
    fam: FunctionalFamily,
    grid,
    seed: int = 0,
    n: int = 200,
    n_small: int = 500,
    Q: Callable = symmetrize,
    act: DilationAction = DilationAction(),
    sampler: Optional[MixtureSampler] = None,
    powers: Sequence[float] = (2.0,),
) -> HypothesisReport:
    """Run every check on ``fam`` over ``grid``; reproducible from ``seed``."""
    sampler = MixtureSampler(grid) if sampler is None else sampler
    entries = []
    entries += check_scalings(fam, act, sampler, seed, n)
    entries += check_cone(fam, Q, sampler, seed, n, act=act, powers=powers)
    entries += check_structure(fam, sampler, seed, n)
    entries += check_compactness_surrogates(fam, sampler, seed, n_small, act=act)
    order = {name: i for i, name in enumerate(HARD + SURROGATES)}
    entries.sort(key=lambda e: order[e.name])
    return HypothesisReport(fam.name, int(seed), tuple(entries))


def check_instance(inst, seed: int = 0, n: int = 200, n_small: int = 500) -> HypothesisReport:
    """Hypothesis report for a :class:`ProblemInstance` on its own grid."""
    from .problems import build_family

    fam = build_family(inst)
    powers = sorted({2.0, float(inst.family.absorption), float(inst.nonlinearity.q)})
    return check_family(fam, inst.build_grid(), seed, n, n_small, powers=powers)


def with_exponents(fam: FunctionalFamily, lambdas=None, lambda_phi=None) -> FunctionalFamily:
    """Copy of ``fam`` with replaced exponents and validation switched off.

    Used to build deliberately broken families for the harness.
    """
    return replace(
        fam,
        lambdas=tuple(fam.lambdas if lambdas is None else lambdas),
        lambda_phi=fam.lambda_phi if lambda_phi is None else lambda_phi,
        validate=False,
        name=fam.name + ":modified",
    )
