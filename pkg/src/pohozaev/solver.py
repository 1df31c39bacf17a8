"""Ground states by descent on a projected energy, then a Newton polish.

Phase A.  Every nonzero ``u`` with ``Phi(u) > 0`` has a unique dilation
``u_{t*}`` on the Pohozaev set, and the reduced energy

    E(u) = max_t I(u_t) = I(u_{t*(u)})

is minimized.  Because ``t*`` maximizes the fiber, the envelope theorem gives
``E'(u) = I'(u_{t*})`` in nodal coordinates.  Directions are preconditioned
(Polak-Ribiere conjugate gradients by default), steps use Armijo backtracking
and every ``symmetrize_every`` iterations ``u`` is replaced by its Schwarz
symmetrization when that does not raise ``E``.

On a fixed grid the Pohozaev identity holds only up to a discretization
defect, so ``E`` has no exact critical point.  The search directions are
therefore projected so that ``t*`` stays put to first order, and the stopping
test uses the residual tangent to the Pohozaev set.  On a periodic box the
dilation shrinks the torus and near-constant states drive ``E`` to zero; there
the amplitude fiber ``max_sigma I(sigma u)`` on the fixed grid is used
instead (``projection="nehari"``).

Phase B.  Newton-Krylov on ``P^-1 I'(u) = 0`` from the phase-A iterate,
accepted only if the result stays positive with nearby energy.  The report
holds the critical point and its projection onto the Pohozaev set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import calculus as calc
from . import core
from .core import FunctionalFamily, Tolerances
from .errors import BracketNotFound, NoConvergence, PhiNeverPositive, PhiNonpositive
from .grids import BoxGrid, GridFunction, RadialGrid, resample
from .nonlinearity import (
    find_tau,
    inclusion_check,
    min_jump_gap,
    mollify,
)
from .problems import ProblemInstance, build_family, operator_field

EPS_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 3000
    step0: float = 1.0
    max_step: float = 16.0
    backtrack: float = 0.5
    c1: float = 1e-4
    max_halvings: int = 40
    tol_energy: float = 1e-13
    stall_window: int = 25
    tol_el: float = 1e-7
    tol_K: float = 1e-10
    tol_t: float = 1e-12
    symmetrize_every: int = 10
    regrid_threshold: float = 0.1
    max_scale_change: float = 0.05
    method: str = "cg"
    pin_scale: bool = True
    pin_translation: bool = False
    nonnegative: bool = True
    projection: str = "auto"
    polish: Optional[bool] = None
    polish_switch: float = 1e-3
    polish_ftol: float = 1e-12
    polish_maxiter: int = 50
    polish_retries: int = 2
    polish_basin: float = 0.05
    seed: int = 0

    def __post_init__(self):
        for name in ("tol_energy", "tol_el", "tol_K", "tol_t", "step0", "c1"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.symmetrize_every < 1:
            raise ValueError("symmetrize_every must be >= 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.method not in ("cg", "descent"):
            raise ValueError("method is 'cg' or 'descent'")
        if self.projection not in ("auto", "pohozaev", "nehari"):
            raise ValueError("projection is 'auto', 'pohozaev' or 'nehari'")
        for name in ("polish_switch", "polish_ftol", "polish_basin"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(self.tol_K, self.tol_t)


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    kind: str
    energy: float
    t_star: float
    K_rel: float
    el: float
    el_tangent: float
    step: float


@dataclass(frozen=True)
class ProjectedState:
    """A state dilated onto the Pohozaev set of its grid."""

    u: GridFunction = field(repr=False)
    t_star: float
    energy: float
    K_residual: float
    K_relative: float
    el_residual: float

    def summary(self) -> dict:
        return {
            "t_star": self.t_star,
            "energy": self.energy,
            "K_residual": self.K_residual,
            "K_relative": self.K_relative,
            "el_residual": self.el_residual,
        }


@dataclass(frozen=True)
class SolveReport:
    u: GridFunction
    energy: float
    K_residual: float
    K_relative: float
    el_residual: float
    el_tangent: float
    iterations: int
    converged: bool
    status: str
    t_star_history: Tuple[float, ...]
    trace: Tuple[TraceEntry, ...] = field(repr=False)
    monotone: bool = True
    max_increase: float = 0.0
    psi: Tuple[float, ...] = ()
    phi: float = 0.0
    problem: dict = field(default_factory=dict)
    options: Optional[SolverOptions] = None
    base: Optional[GridFunction] = field(default=None, repr=False)
    projection: str = "pohozaev"
    polish_attempts: int = 0
    projected: Optional[ProjectedState] = None

    def summary(self) -> dict:
        out = {
            "energy": self.energy,
            "K_residual": self.K_residual,
            "K_relative": self.K_relative,
            "el_residual": self.el_residual,
            "el_tangent": self.el_tangent,
            "iterations": self.iterations,
            "converged": self.converged,
            "status": self.status,
            "monotone": self.monotone,
            "max_increase": self.max_increase,
            "psi": list(self.psi),
            "phi": self.phi,
            "projection": self.projection,
            "polish_attempts": self.polish_attempts,
        }
        if self.projected is not None:
            out["projected"] = self.projected.summary()
        return out


# ---------------------------------------------------------------------------
# initial guess


def _cutoff(r: np.ndarray, width: float = 1.0) -> np.ndarray:
    """C-infinity step: 1 on r <= 1, 0 on r >= 1 + width."""
    x = np.clip((r - 1.0) / width, 0.0, 1.0)

    def e(z):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(z > 0, np.exp(-1.0 / np.where(z > 0, z, 1.0)), 0.0)

    a, b = e(1.0 - x), e(x)
    return a / (a + b)


def initial_guess(
    inst: ProblemInstance,
    grid=None,
    fam: Optional[FunctionalFamily] = None,
    growth: float = 1.5,
    attempts: int = 40,
) -> GridFunction:
    """Plateau of height about tau on the unit ball, scaled up until Phi > 0."""
    grid = inst.build_grid() if grid is None else grid
    fam = build_family(inst) if fam is None else fam
    tau = find_tau(inst.nonlinearity, inst.family.absorption) or 1.0
    profile = _cutoff(grid.distance)
    amp = tau
    for _ in range(attempts):
        u = GridFunction(grid, amp * profile, monotone_flag=isinstance(grid, RadialGrid))
        if fam.phi_eval(u) > 0:
            return u
        amp *= growth
    raise PhiNeverPositive(f"Phi(u) <= 0 after {attempts} amplitude increases (last amplitude {amp:g})")


# ---------------------------------------------------------------------------
# residuals


def el_residual(inst: ProblemInstance, fam: FunctionalFamily, u: GridFunction) -> float:
    """Dual norm ``sqrt(g . P^-1 g)`` of the Euler-Lagrange covector ``g = I'(u)``."""
    g = fam.gradient(u)
    return fam.dual_norm(u, g)


# ---------------------------------------------------------------------------
# phase A: descent on a projected energy


@dataclass
class _Point:
    """A phase-A iterate and its projection."""

    values: np.ndarray
    t: float  # Pohozaev t* of the projected state
    energy: float
    K_rel: float
    vals: object


@dataclass
class _State:
    u: GridFunction
    g: np.ndarray
    z: np.ndarray
    el: float
    el_tangent: float


def _free(g: np.ndarray, values: np.ndarray, nonnegative: bool) -> np.ndarray:
    """Drop the components held by the constraint ``u >= 0`` (zero nodes pushed downward)."""
    if not nonnegative:
        return g
    return np.where((values > 0) | (g < 0), g, 0.0)


def _K_rel(dv) -> float:
    return abs(dv.K) / max(dv.K_scale, core.EPS)


class _Pohozaev:
    """E(v) = I(v on grid_{t*}) with the dilation acting on the grid."""

    name = "pohozaev"
    regrids = True

    def __init__(self, fam: FunctionalFamily, grid, opts: SolverOptions):
        self.fam = fam
        self.grid = grid
        self.tol_t = opts.tol_t
        self.pin_scale = opts.pin_scale
        self.pin_translation = opts.pin_translation
        self.nonnegative = opts.nonnegative

    def project(self, values: np.ndarray) -> Optional[_Point]:
        vals = self.fam.evaluate(GridFunction(self.grid, values))
        if not vals.phi > 0:
            return None
        t = core.fiber_root(vals.psi, vals.phi, vals.lambdas, vals.lambda_phi, self.tol_t)
        dv = vals.dilated(t)
        return _Point(values, t, float(dv.I), _K_rel(dv), vals)

    def projected(self, pt: _Point) -> GridFunction:
        return GridFunction(self.grid.dilate(pt.t), pt.values)

    def state(self, pt: _Point) -> _State:
        u_t = self.projected(pt)
        g = _free(self.fam.gradient(u_t), pt.values, self.nonnegative)
        z = self.fam.precondition(u_t, g)
        gz = max(float(np.sum(g * z)), 0.0)
        el = math.sqrt(gz)
        cons = []
        if self.pin_scale:
            # keep t* stationary to first order: E is flat along P^-1 K'(u_t)
            # up to discretization error
            cons.append(self.fam.gradient(u_t, psi_weights=self.fam.lambdas, phi_weight=self.fam.lambda_phi))
        if self.pin_translation and isinstance(self.grid, BoxGrid):
            # freeze the centre of mass of u^2 against the near-neutral lattice shifts
            w = np.broadcast_to(u_t.grid.weights, u_t.grid.shape)
            m = w * pt.values**2
            for i in range(self.grid.dim):
                x = u_t.grid.coords(i).reshape([-1 if j == i else 1 for j in range(self.grid.dim)])
                xbar = float(np.sum(m * x) / max(float(np.sum(m)), core.EPS))
                cons.append(2.0 * w * (x - xbar) * pt.values)
        if not cons:
            return _State(u_t, g, z, el, el)
        if self.nonnegative:
            cons = [np.where(pt.values > 0, c, 0.0) for c in cons]
        ys = [self.fam.precondition(u_t, c) for c in cons]
        gram = np.array([[float(np.sum(c * y)) for y in ys] for c in cons])
        gy = np.array([float(np.sum(g * y)) for y in ys])
        if not np.all(np.isfinite(gram)) or not np.all(np.diag(gram) > 0):
            return _State(u_t, g, z, el, el)
        a = np.linalg.lstsq(gram, gy, rcond=1e-12)[0]
        z = z - sum(ai * y for ai, y in zip(a, ys))
        return _State(u_t, g, z, el, math.sqrt(max(gz - float(gy @ a), 0.0)))

    def converged(self, pt: _Point, st: _State, opts: SolverOptions) -> bool:
        return st.el_tangent <= opts.tol_el and pt.K_rel <= opts.tol_K

    def on_base(self, pt: _Point) -> np.ndarray:
        return np.array(resample(self.projected(pt), self.grid).values)


class _Nehari:
    """J(v) = max_sigma I(sigma v) on the fixed grid; iterates are kept at sigma = 1."""

    name = "nehari"
    regrids = False

    def __init__(self, fam: FunctionalFamily, grid, opts: SolverOptions):
        self.fam = fam
        self.grid = grid
        self.tol_t = opts.tol_t
        self.nonnegative = opts.nonnegative

    def _slope(self, values, sigma):
        return float(np.sum(self.fam.gradient(GridFunction(self.grid, sigma * values)) * values))

    def _sigma(self, values) -> Optional[float]:
        lo = hi = 1.0
        d = self._slope(values, 1.0)
        if not math.isfinite(d):
            return None
        for _ in range(60):
            if d > 0:
                lo, hi = hi, 2.0 * hi
                d = self._slope(values, hi)
                if d <= 0:
                    break
            else:
                hi, lo = lo, 0.5 * lo
                d = self._slope(values, lo)
                if d > 0:
                    break
        else:
            return None
        if not (self._slope(values, lo) > 0 >= self._slope(values, hi)):
            return None
        return optimize.brentq(lambda x: self._slope(values, x), lo, hi, xtol=1e-15, rtol=4 * core.EPS)

    def project(self, values: np.ndarray) -> Optional[_Point]:
        sigma = self._sigma(values)
        if sigma is None:
            return None
        v = sigma * values
        vals = self.fam.evaluate(GridFunction(self.grid, v))
        # the Pohozaev scale is diagnostic here; Phi may be <= 0 on the Nehari set
        try:
            t = core.fiber_root(vals.psi, vals.phi, vals.lambdas, vals.lambda_phi, self.tol_t)
        except (PhiNonpositive, BracketNotFound, ValueError):
            t = float("nan")
        return _Point(v, t, float(vals.I), _K_rel(vals), vals)

    def projected(self, pt: _Point) -> GridFunction:
        return GridFunction(self.grid, pt.values)

    def state(self, pt: _Point) -> _State:
        u = self.projected(pt)
        g = _free(self.fam.gradient(u), pt.values, self.nonnegative)
        z = self.fam.precondition(u, g)
        el = math.sqrt(max(float(np.sum(g * z)), 0.0))
        return _State(u, g, z, el, el)

    def converged(self, pt: _Point, st: _State, opts: SolverOptions) -> bool:
        return st.el <= opts.tol_el

    def on_base(self, pt: _Point) -> np.ndarray:
        return np.array(pt.values)


def _projection_for(inst: ProblemInstance, opts: SolverOptions) -> str:
    if opts.projection != "auto":
        return opts.projection
    # dilating a periodic box shrinks the torus: constants then drive E to zero
    return "nehari" if inst.family.kind == "fractional" else "pohozaev"


def _polish_for(inst: ProblemInstance, opts: SolverOptions) -> bool:
    # for p < 2 the Hessian of |d|^p blows up where differences vanish, so the
    # anisotropic polish may fail; phase A's state is then reported as stalled
    return True if opts.polish is None else opts.polish


def _descend(proj, pt: _Point, opts: SolverOptions, stop_el: float, it0: int, trace: list):
    """Run phase A from ``pt`` until ``el_tangent <= stop_el`` (or the full test)."""
    nan = float("nan")
    t_hist = [pt.t]
    d_prev = g_prev = z_prev = None
    alpha = opts.step0
    status = "max_iters"
    window = [pt.energy]
    it = it0

    while True:
        # regrid when the projection drifts far from the base scale
        if proj.regrids and abs(math.log(pt.t)) > opts.regrid_threshold:
            new = proj.project(proj.on_base(pt))
            if new is not None:
                pt = new
                trace.append(TraceEntry(it, "regrid", pt.energy, pt.t, pt.K_rel, nan, nan, 0.0))
                window.append(pt.energy)
                d_prev = None

        st = proj.state(pt)
        trace.append(TraceEntry(it, "descent" if it > it0 else "start", pt.energy, pt.t, pt.K_rel,
                                st.el, st.el_tangent, alpha if it > it0 else 0.0))

        if proj.converged(pt, st, opts):
            status = "converged"
            break
        if st.el_tangent <= stop_el:
            status = "switched"
            break
        if len(window) > opts.stall_window and window[-opts.stall_window - 1] - pt.energy <= opts.tol_energy * abs(pt.energy):
            status = "stalled"
            break
        if it >= opts.max_iters:
            break
        it += 1

        # symmetrize u (not its projection), then compare projected energies
        if it % opts.symmetrize_every == 0:
            qv = np.array(calc.symmetrize(GridFunction(proj.grid, pt.values)).values)
            if not np.array_equal(qv, pt.values):
                q = proj.project(qv)
                if q is not None and q.energy <= pt.energy:
                    pt = q
                    trace.append(TraceEntry(it, "symmetrize", pt.energy, pt.t, pt.K_rel, nan, nan, 0.0))
                    window.append(pt.energy)
                    d_prev = None
                    st = proj.state(pt)

        g, z = st.g, st.z
        d = -z
        if opts.method == "cg" and d_prev is not None:
            beta = float(np.sum(g * (z - z_prev))) / max(float(np.sum(g_prev * z_prev)), 1e-300)
            d = -z + max(beta, 0.0) * d_prev
        slope = float(np.sum(g * d))
        if not slope < 0:
            d = -z
            slope = -float(np.sum(g * z))
        if not slope < 0:
            status = "stalled"
            break

        # Armijo backtracking; trial points must keep a projection
        a = min(opts.max_step, 2.0 * alpha) if d_prev is not None else opts.step0
        accepted = any_proj = False
        for _ in range(opts.max_halvings + 1):
            step = pt.values + a * d
            if opts.nonnegative:
                # projected step onto the cone u >= 0; Armijo on the actual displacement
                step = np.maximum(step, 0.0)
                decrease = float(np.sum(g * (step - pt.values)))
            else:
                decrease = a * slope
            trial = proj.project(step)
            if trial is not None:
                any_proj = True
                # scale trust region: a jump in t* means the step left the slice
                in_region = not proj.regrids or abs(math.log(trial.t / pt.t)) <= opts.max_scale_change
                if in_region and trial.energy <= pt.energy + opts.c1 * min(decrease, 0.0):
                    accepted = True
                    break
            a *= opts.backtrack
        if not accepted:
            if not any_proj:
                raise PhiNonpositive("every backtracking trial left the region Phi > 0")
            status = "stalled"
            break
        pt = trial
        alpha = a
        d_prev, g_prev, z_prev = d, g, z
        t_hist.append(pt.t)
        window.append(pt.energy)

    return pt, st, status, it, t_hist


# ---------------------------------------------------------------------------
# phase B: Newton-Krylov on the discrete Euler-Lagrange equation


def _polish(fam: FunctionalFamily, grid, values: np.ndarray, energy: float, opts: SolverOptions):
    """Newton-Krylov on ``P^-1 I'(u) = 0`` from ``values``; ``None`` if it leaves the basin."""

    def residual(v):
        u = GridFunction(grid, v)
        return fam.precondition(u, fam.gradient(u))

    scale_u = max(float(np.max(np.abs(values))), 1.0)
    try:
        v = optimize.newton_krylov(
            residual, values, f_tol=opts.polish_ftol * scale_u, maxiter=opts.polish_maxiter, method="lgmres"
        )
    except optimize.NoConvergence as exc:
        v = np.asarray(exc.args[0], dtype=float)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError):
        return None
    if not np.all(np.isfinite(v)):
        return None
    u = GridFunction(grid, v)
    vals = fam.evaluate(u)
    peak = float(np.max(v))
    # the polished point must still be the positive bump phase A was heading to
    if not (vals.phi > 0 and vals.I > 0 and peak > 0):
        return None
    if float(np.min(v)) < -opts.polish_basin * peak:
        return None
    if abs(vals.I - energy) > opts.polish_basin * abs(energy):
        return None
    return u


def minimize(
    inst: ProblemInstance,
    fam: FunctionalFamily,
    u0: GridFunction,
    opts: SolverOptions = SolverOptions(),
) -> SolveReport:
    """Minimize the projected energy from ``u0``, then polish; see the module docstring."""
    base = u0.grid
    kind = _projection_for(inst, opts)
    proj = (_Nehari if kind == "nehari" else _Pohozaev)(fam, base, opts)
    v = np.array(u0.values, dtype=float)
    if not fam.phi_eval(GridFunction(base, v)) > 0:
        raise PhiNonpositive("Phi(u0) <= 0: the initial guess has no projection")
    pt = proj.project(v)
    if pt is None:
        raise PhiNonpositive("the initial guess has no projection")
    trace: List[TraceEntry] = []
    nan = float("nan")

    # amplitude prestep: a barely admissible guess projects to an extreme scale
    if proj.regrids and abs(math.log(pt.t)) > opts.regrid_threshold:
        best, best_amp = pt, 1.0
        for amp in np.geomspace(1.5**-10, 1.5**30, 161):
            cand = proj.project(amp * v)
            if cand is not None and cand.energy < best.energy:
                best, best_amp = cand, float(amp)
        pt = best
        trace.append(TraceEntry(0, "rescale", pt.energy, pt.t, pt.K_rel, nan, nan, best_amp))

    polish = _polish_for(inst, opts)
    el0 = proj.state(pt).el_tangent
    switch = max(opts.polish_switch * el0, opts.tol_el) if polish else 0.0
    t_hist: List[float] = []
    it = 0
    u_final = None
    polish_tries = 0
    while True:
        pt, st, status, it, hist = _descend(proj, pt, opts, switch, it, trace)
        t_hist.extend(hist)
        if not polish or status == "max_iters":
            break
        polish_tries += 1
        cand = _polish(fam, base, proj.on_base(pt), pt.energy, opts)
        if cand is not None:
            el = el_residual(inst, fam, cand)
            trace.append(TraceEntry(it, "polish", float(fam.energy(cand)), nan, nan, el, nan, 0.0))
            if el <= opts.tol_el:
                u_final, status = cand, "converged"
                break
        if status != "switched":
            break  # phase A converged on its own, or stalled
        if polish_tries > opts.polish_retries:
            status = "polish_failed"
            break
        switch *= 1e-2
    if u_final is None:
        u_final = proj.projected(pt)

    report = _report(inst, fam, u_final, st, it, polish_tries, status, kind, t_hist, trace, opts,
                     GridFunction(base, proj.on_base(pt)))
    if status in ("max_iters", "polish_failed"):
        raise NoConvergence(
            f"{status}: no convergence after {it} iterations (residual {report.el_residual:.3e})", report
        )
    return report


def _pohozaev_state(fam: FunctionalFamily, u: GridFunction, tol_t: float) -> ProjectedState:
    vals = fam.evaluate(u)
    t = core.fiber_root(vals.psi, vals.phi, vals.lambdas, vals.lambda_phi, tol_t)
    u_t = GridFunction(u.grid.dilate(t), u.values)
    dv = vals.dilated(t)
    el = fam.dual_norm(u_t, fam.gradient(u_t)) if fam.dual_norm is not None else float("nan")
    return ProjectedState(u_t, float(t), float(dv.I), float(abs(dv.K)), _K_rel(dv), float(el))


def _report(inst, fam, u, st, it, polish_tries, status, kind, t_hist, trace, opts, base) -> SolveReport:
    vals = fam.evaluate(u)
    energies = [e.energy for e in trace if e.kind in ("start", "descent", "symmetrize")]
    rises = np.diff(energies) if len(energies) > 1 else np.zeros(1)
    max_rise = float(max(np.max(rises), 0.0))
    E = float(vals.I)
    return SolveReport(
        u=u,
        energy=E,
        K_residual=float(abs(vals.K)),
        K_relative=_K_rel(vals),
        el_residual=float(el_residual(inst, fam, u)),
        el_tangent=float(st.el_tangent),
        iterations=it,
        converged=status == "converged",
        status=status,
        t_star_history=tuple(float(x) for x in t_hist),
        trace=tuple(trace),
        monotone=bool(max_rise <= opts.tol_energy * max(abs(energies[0]) if energies else 1.0, abs(E))),
        max_increase=max_rise,
        psi=tuple(float(x) for x in vals.psi),
        phi=float(vals.phi),
        problem=inst.describe(),
        options=opts,
        base=base,
        projection=kind,
        polish_attempts=polish_tries,
        projected=_pohozaev_state(fam, u, opts.tol_t),
    )


def solve(inst: ProblemInstance, opts: SolverOptions = SolverOptions(), u0: Optional[GridFunction] = None) -> SolveReport:
    """Build the family, the initial guess and minimize."""
    fam = build_family(inst)
    grid = inst.build_grid()
    if u0 is None:
        u0 = initial_guess(inst, grid, fam)
    elif u0.grid.describe() != grid.describe():
        u0 = resample(u0, grid)
    else:
        u0 = GridFunction(grid, u0.values, u0.monotone_flag)
    return minimize(inst, fam, u0, opts)


# ---------------------------------------------------------------------------
# discontinuous nonlinearities


@dataclass(frozen=True)
class DiscontinuousReport:
    reports: Tuple[SolveReport, ...]
    epsilons: Tuple[float, ...]
    violations: Tuple[float, ...]
    support_volume: float
    tol: float

    @property
    def final(self) -> SolveReport:
        return self.reports[-1]

    @property
    def relative_violations(self) -> Tuple[float, ...]:
        return tuple(v / self.support_volume for v in self.violations)

    @property
    def energies(self) -> Tuple[float, ...]:
        return tuple(r.energy for r in self.reports)


def support_volume(u: GridFunction, level: float = 1e-3) -> float:
    """Measure of ``{u >= level * max u}``."""
    peak = float(np.max(u.values))
    w = np.broadcast_to(u.grid.weights, u.grid.shape)
    return float(np.sum(w[u.values >= level * peak])) if peak > 0 else 0.0


def inclusion_violation(inst: ProblemInstance, u: GridFunction, rel_tol: float = 1e-6) -> Tuple[float, float]:
    """Violation measure of the differential inclusion for ``u`` and the tolerance used."""
    lhs = operator_field(inst, u)
    tol = rel_tol * max(float(np.max(np.abs(inst.nonlinearity.f(u.values)))), 1.0)
    return inclusion_check(inst.nonlinearity, u, lhs, tol), tol


def solve_discontinuous(
    inst: ProblemInstance,
    eps_schedule: Sequence[float] = EPS_SCHEDULE,
    opts: SolverOptions = SolverOptions(),
    relative_to_gap: bool = True,
    rel_tol: float = 1e-6,
) -> DiscontinuousReport:
    """Solve the mollified problems along ``eps_schedule``, warm-starting each stage.

    With ``relative_to_gap`` the schedule is multiplied by the smallest gap
    between jump points (and zero).  A continuous nonlinearity is solved once.
    """
    spec = inst.nonlinearity
    if spec.continuous:
        rep = solve(inst, opts)
        vio, tol = inclusion_violation(inst, rep.u, rel_tol)
        n = len(eps_schedule)
        return DiscontinuousReport((rep,) * n, tuple(eps_schedule), (vio,) * n, support_volume(rep.u), tol)
    gap = min_jump_gap(spec) if relative_to_gap else 1.0
    eps_list = tuple(float(e) * gap for e in eps_schedule)
    reports, violations = [], []
    u_prev = None
    tol = 0.0
    for eps in eps_list:
        smooth = mollify(spec, eps).as_spec()
        stage = inst.with_nonlinearity(smooth)
        rep = solve(stage, opts, u0=u_prev)
        reports.append(rep)
        vio, tol = inclusion_violation(inst, rep.u, rel_tol)
        violations.append(vio)
        u_prev = rep.base
    return DiscontinuousReport(tuple(reports), eps_list, tuple(violations), support_volume(reports[-1].u), tol)
