"""Functional families, fiber maps and the projection onto the Pohozaev set.

A family is a tuple ``(psi_1..psi_n, Phi, lambda_1..lambda_n, lambda_Phi)``
with ``psi_i(u_t) = t^lambda_i psi_i(u)`` and ``Phi(u_t) = t^lambda_Phi Phi(u)``.
Along a dilation orbit the energy ``I = sum psi_i - Phi`` is therefore a
generalized polynomial in ``t``,

    h(t) = sum_i t^lambda_i psi_i(u) - t^lambda_Phi Phi(u),

and the Pohozaev operator ``K = sum lambda_i psi_i - lambda_Phi Phi`` equals
``t h'(t)``.  Projection onto ``{K = 0}`` is a monotone scalar root problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from . import grids
from .errors import BracketNotFound, NonadmissibleExponents, NonFiniteValue, NotOnManifold, PhiNonpositive
from .grids import GridFunction

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Tolerances:
    tol_K: float = 1e-10
    tol_t: float = 1e-12


@dataclass(frozen=True)
class FamilyValues:
    """Cached functional values of one grid function."""

    psi: np.ndarray
    phi: float
    lambdas: np.ndarray
    lambda_phi: float

    @property
    def J(self) -> float:
        return float(np.sum(self.psi))

    @property
    def I(self) -> float:
        return self.J - self.phi

    @property
    def K(self) -> float:
        return float(np.dot(self.lambdas, self.psi)) - self.lambda_phi * self.phi

    @property
    def K_scale(self) -> float:
        """Magnitude against which |K| is measured."""
        return float(np.dot(self.lambdas, self.psi)) + self.lambda_phi * abs(self.phi)

    def h(self, t):
        t = np.asarray(t, dtype=float)
        out = -np.power(t, self.lambda_phi) * self.phi
        for lam, p in zip(self.lambdas, self.psi):
            out = out + np.power(t, lam) * p
        return out

    def K_along(self, t):
        t = np.asarray(t, dtype=float)
        out = -self.lambda_phi * np.power(t, self.lambda_phi) * self.phi
        for lam, p in zip(self.lambdas, self.psi):
            out = out + lam * np.power(t, lam) * p
        return out

    def dilated(self, t: float) -> "FamilyValues":
        return FamilyValues(
            self.psi * np.power(t, self.lambdas),
            self.phi * t**self.lambda_phi,
            self.lambdas,
            self.lambda_phi,
        )


@dataclass(frozen=True)
class FunctionalFamily:
    """The abstract tuple behind an energy ``I = J - Phi``.

    Evaluation maps take a :class:`GridFunction` and return a float; gradient
    maps return the covector ``dF/du_j`` as an array shaped like the grid.
    ``norm``, ``precondition`` (``g -> P^-1 g``) and ``dual_norm`` are
    optional hooks used by the solver and the hypothesis harness.
    """

    psi_evals: Tuple[Callable, ...]
    phi_eval: Callable
    lambdas: Tuple[float, ...]
    lambda_phi: float
    psi_grads: Optional[Tuple[Callable, ...]] = None
    phi_grad: Optional[Callable] = None
    name: str = "family"
    norm: Optional[Callable] = None
    precondition: Optional[Callable] = None
    dual_norm: Optional[Callable] = None
    psi_names: Tuple[str, ...] = ()
    validate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "psi_evals", tuple(self.psi_evals))
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        if self.psi_grads is not None:
            object.__setattr__(self, "psi_grads", tuple(self.psi_grads))
        if len(self.lambdas) != len(self.psi_evals):
            raise ValueError("one exponent per psi functional is required")
        if self.validate:
            check_exponents(self.lambdas, self.lambda_phi)

    @property
    def n(self) -> int:
        return len(self.psi_evals)

    @property
    def has_gradients(self) -> bool:
        return self.psi_grads is not None and self.phi_grad is not None

    def evaluate(self, u: GridFunction) -> FamilyValues:
        psi = np.array([float(f(u)) for f in self.psi_evals])
        phi = float(self.phi_eval(u))
        if not (np.all(np.isfinite(psi)) and math.isfinite(phi)):
            raise NonFiniteValue(f"{self.name}: functional evaluation is not finite")
        return FamilyValues(psi, phi, np.array(self.lambdas), float(self.lambda_phi))

    def energy(self, u: GridFunction) -> float:
        return self.evaluate(u).I

    def gradient(self, u: GridFunction, psi_weights=None, phi_weight: float = 1.0) -> np.ndarray:
        """Covector of ``sum_i a_i psi_i - b Phi`` (``a_i = 1, b = 1`` gives I')."""
        from .errors import MissingGradient

        if not self.has_gradients:
            raise MissingGradient(f"{self.name} has no gradient hooks")
        a = np.ones(self.n) if psi_weights is None else psi_weights
        g = -phi_weight * self.phi_grad(u)
        for ai, grad in zip(a, self.psi_grads):
            g = g + ai * grad(u)
        return g


def check_exponents(lambdas: Sequence[float], lambda_phi: float) -> None:
    """Hypothesis (X3): ``0 < max(lambda_i) < lambda_Phi``."""
    lam_max = max(lambdas)
    if not (lam_max > 0):
        raise NonadmissibleExponents(f"max(lambda_i) = {lam_max:g} must be positive")
    if not (lam_max < lambda_phi):
        raise NonadmissibleExponents(
            f"max(lambda_i) = {lam_max:g} must be below lambda_Phi = {lambda_phi:g}"
        )


@dataclass(frozen=True)
class DilationAction:
    """``(t, u) -> u_t`` with ``u_t(x) = u(x/t)`` and ``u_0 = 0``."""

    apply: Callable = grids.scale

    def __call__(self, t: float, u: GridFunction) -> GridFunction:
        return self.apply(u, t)


def scale(act: DilationAction, u: GridFunction, t: float) -> GridFunction:
    return act(t, u)


@dataclass(frozen=True)
class FiberProfile:
    t_samples: np.ndarray
    h_values: np.ndarray
    k_values: np.ndarray
    t_star: float
    h_star: float
    k_residual: float
    tail_negative: bool


@dataclass(frozen=True)
class PohozaevState:
    u: GridFunction
    on_manifold: bool
    K_value: float
    I_value: float
    values: FamilyValues = field(repr=False)
    t_star: float = 1.0

    @property
    def nonnegative(self) -> bool:
        """Membership flag for the P^+ subset."""
        return bool(np.all(self.u.values >= 0))


def eval_K(fam: FunctionalFamily, u: GridFunction) -> float:
    return fam.evaluate(u).K


def make_state(fam: FunctionalFamily, u: GridFunction, tol: Tolerances = Tolerances(), t_star: float = 1.0) -> PohozaevState:
    """Evaluate ``u`` and decide membership in the Pohozaev set."""
    vals = fam.evaluate(u)
    K = vals.K
    on = abs(K) <= tol.tol_K * max(vals.K_scale, EPS) and vals.J > 0
    return PohozaevState(u, bool(on), K, vals.I, vals, t_star)


# ---------------------------------------------------------------------------
# scalar root finding


def _monotone_map(psi, phi, lambdas, lambda_phi):
    """m(x) with x = log t, after dividing the root equation by t^lambda_max.

    Returns callables (m, dm/dx); ties at lambda_max are grouped into one
    constant term.
    """
    lam = np.asarray(lambdas, dtype=float)
    psi = np.asarray(psi, dtype=float)
    lam_max = float(lam.max())
    top = lam == lam_max
    const = lam_max * float(np.sum(psi[top]))
    low_lam = lam[~top]
    low_coef = low_lam * psi[~top]
    low_exp = low_lam - lam_max
    c_phi = lambda_phi * phi
    e_phi = lambda_phi - lam_max

    def m(x):
        return c_phi * math.exp(e_phi * x) - float(np.sum(low_coef * np.exp(low_exp * x))) - const

    def dm(x):
        return c_phi * e_phi * math.exp(e_phi * x) - float(np.sum(low_coef * low_exp * np.exp(low_exp * x)))

    return m, dm


def fiber_root(psi, phi, lambdas, lambda_phi, tol_t: float = 1e-12) -> float:
    """Unique ``t > 0`` with ``sum lambda_i t^lambda_i psi_i = lambda_Phi t^lambda_Phi Phi``.

    Geometric bracketing from t = 1 (factor 2, within [2^-60, 2^60]), then
    bisection safeguarded Newton in ``log t``.
    """
    if not phi > 0:
        raise PhiNonpositive(f"Phi(u) = {phi:g} <= 0: the fiber has no interior maximum")
    if not np.any(np.asarray(psi) > 0):
        raise ValueError("at least one psi_i(u) must be positive")
    m, dm = _monotone_map(psi, phi, lambdas, lambda_phi)
    step = math.log(2.0)
    limit = 60 * step
    m0 = m(0.0)
    if m0 == 0:
        return 1.0
    lo, hi = (0.0, None) if m0 < 0 else (None, 0.0)
    x = 0.0
    while lo is None or hi is None:
        x = x + step if hi is None else x - step
        if abs(x) > limit + 1e-12:
            raise BracketNotFound("no sign change of the Pohozaev equation within [2^-60, 2^60]")
        mx = m(x)
        if mx == 0:
            return math.exp(x)
        if mx < 0:
            lo = x
        else:
            hi = x
    x = 0.5 * (lo + hi)
    for _ in range(200):
        mx = m(x)
        if mx == 0:
            break
        if mx < 0:
            lo = x
        else:
            hi = x
        d = dm(x)
        x_new = x - mx / d if d > 0 else None
        if x_new is None or not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol_t or hi - lo <= tol_t:
            x = x_new
            break
        x = x_new
    return math.exp(x)


# ---------------------------------------------------------------------------
# operations


def project_to_pohozaev(
    fam: FunctionalFamily,
    u: GridFunction,
    tol: Tolerances = Tolerances(),
    act: DilationAction = DilationAction(),
    values: Optional[FamilyValues] = None,
) -> Tuple[float, PohozaevState]:
    """Dilate ``u`` onto the Pohozaev set: returns ``(t*, state of u_t*)``."""
    vals = fam.evaluate(u) if values is None else values
    t_star = fiber_root(vals.psi, vals.phi, vals.lambdas, vals.lambda_phi, tol.tol_t)
    state = make_state(fam, act(t_star, u), tol, t_star)
    return t_star, state


def fiber(
    fam: FunctionalFamily,
    act: DilationAction,
    u: GridFunction,
    t_grid: Sequence[float],
    tol: Tolerances = Tolerances(),
) -> FiberProfile:
    """Sample ``h(t) = I(u_t)`` from the closed-form power expansion.

    ``K(u_t*)`` is re-evaluated on the actually dilated function, so
    ``k_residual`` independently checks the power laws.
    """
    vals = fam.evaluate(u)
    if not vals.phi > 0:
        raise PhiNonpositive(f"Phi(u) = {vals.phi:g} <= 0: the fiber has no interior maximum")
    t = np.sort(np.asarray(t_grid, dtype=float))
    if np.any(t <= 0):
        raise ValueError("fiber samples must be positive")
    t_star = fiber_root(vals.psi, vals.phi, vals.lambdas, vals.lambda_phi, tol.tol_t)
    h = vals.h(t)
    k = vals.K_along(t)
    k_res = abs(fam.evaluate(act(t_star, u)).K)
    return FiberProfile(
        t_samples=t,
        h_values=h,
        k_values=k,
        t_star=t_star,
        h_star=float(vals.h(t_star)),
        k_residual=k_res,
        tail_negative=bool(h[-1] < 0),
    )


def onmanifold_energy(values: FamilyValues) -> float:
    """``sum (1 - lambda_i/lambda_Phi) psi_i``: the energy of a state on P."""
    lam = values.lambdas
    return float(np.sum((1.0 - lam / values.lambda_phi) * values.psi))


def pohozaev_identity_check(fam: FunctionalFamily, st: PohozaevState, tol: Tolerances = Tolerances()) -> float:
    """Relative gap between ``I(u)`` and ``sum (1 - lambda_i/lambda_Phi) psi_i(u)``."""
    if not st.on_manifold:
        raise NotOnManifold(f"K(u) = {st.K_value:g} is not zero to tolerance")
    vals = fam.evaluate(st.u)
    if abs(vals.K) > tol.tol_K * max(vals.K_scale, EPS):
        raise NotOnManifold(f"K(u) = {vals.K:g} is not zero to tolerance")
    rhs = onmanifold_energy(vals)
    return abs(vals.I - rhs) / max(abs(vals.I), EPS)
