"""Radial shooting for ``-Delta u + u = f(u)``, independent of the grid solvers.

The ground state is the decaying separatrix of

    u'' + (N-1)/r u' = u - f(u),   u'(0) = 0,

between trajectories that cross zero (``u(0)`` too large) and trajectories
that turn back up (``u(0)`` too small).  Past the point where the bracketed
trajectory is still trustworthy, the profile is continued by the linear tail
``c r^{-nu} K_nu(r)``, ``nu = (N-2)/2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import BracketNotFound
from .grids import GridFunction, RadialGrid, sphere_area
from .nonlinearity import NonlinearitySpec

OVERSHOOT = 1
UNDERSHOOT = -1
R0 = 1e-6
ODE_TOL = dict(rtol=1e-12, atol=1e-14, method="DOP853")


@dataclass(frozen=True)
class ShootingResult:
    dim: int
    u0: float
    u0_bracket: tuple
    r: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    r_match: float = 0.0
    tail_coef: float = 0.0
    psi: float = 0.0
    phi: float = 0.0

    @property
    def energy(self) -> float:
        return self.psi - self.phi

    @property
    def K(self) -> float:
        return (self.dim - 2) * self.psi - self.dim * self.phi

    @property
    def K_relative(self) -> float:
        return abs(self.K) / ((self.dim - 2) * self.psi + self.dim * abs(self.phi))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inner = np.interp(r, self.r, self.u)
        nu = 0.5 * (self.dim - 2)
        rr = np.maximum(r, self.r_match)
        tail = self.tail_coef * rr**-nu * special.kv(nu, rr)
        return np.where(r <= self.r_match, inner, tail)

    def on_grid(self, grid: RadialGrid) -> GridFunction:
        return GridFunction(grid, self(grid.radii))


def _rhs(spec: NonlinearitySpec, N: int):
    def rhs(r, y):
        u, v = y[0], y[1]
        fu = float(spec.f(u))
        dv = u - fu - (N - 1) / r * v
        return [v, dv, v * v * r ** (N - 1), float(spec.F(u)) * r ** (N - 1), u * u * r ** (N - 1)]

    return rhs


def _start(spec: NonlinearitySpec, N: int, u0: float):
    a = (u0 - float(spec.f(u0))) / N
    return [u0 + 0.5 * a * R0**2, a * R0, 0.0, 0.0, 0.0]


def _events():
    def cross(r, y):
        return y[0]

    cross.terminal = True
    cross.direction = -1

    def turn(r, y):
        return y[1]

    turn.terminal = True
    turn.direction = 1
    return [cross, turn]


def _integrate(spec, N, u0, r_max, dense=False):
    return integrate.solve_ivp(
        _rhs(spec, N), (R0, r_max), _start(spec, N, u0), events=_events(), dense_output=dense, **ODE_TOL
    )


def classify(spec: NonlinearitySpec, N: int, u0: float, r_max: float = 60.0) -> int:
    """``+1`` if the trajectory crosses zero, ``-1`` if it turns back up."""
    if u0 - float(spec.f(u0)) >= 0:
        return UNDERSHOOT  # increasing from the centre
    sol = _integrate(spec, N, u0, r_max)
    if sol.t_events[0].size:
        return OVERSHOOT
    if sol.t_events[1].size:
        return UNDERSHOOT
    return 0


def shooting_oracle(
    N: int,
    spec: NonlinearitySpec,
    u0_window=(1e-3, 1e3),
    tol: float = 1e-12,
    match_level: float = 1e-3,
) -> ShootingResult:
    """Bracket the ground state's central value and integrate its energy."""
    if N < 3:
        raise ValueError("the radial oracle needs N >= 3")
    if not spec.continuous:
        raise ValueError("the shooting oracle needs a continuous nonlinearity")
    scan = np.geomspace(u0_window[0], u0_window[1], 61)
    kinds = [classify(spec, N, x) for x in scan]
    lo = hi = None
    for a, b, ka, kb in zip(scan, scan[1:], kinds, kinds[1:]):
        if ka == UNDERSHOOT and kb == OVERSHOOT:
            lo, hi = a, b
            break
    if lo is None:
        raise BracketNotFound("no undershoot/overshoot alternation in the u(0) scan window")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        k = classify(spec, N, mid)
        if k == OVERSHOOT:
            hi = mid
        elif k == UNDERSHOOT:
            lo = mid
        else:
            break
        if mid in (lo, hi) and hi - lo <= 4 * np.spacing(hi):
            break

    # the undershooting trajectory follows the separatrix until it turns
    sol = _integrate(spec, N, lo, 60.0, dense=True)
    r_end = sol.t[-1]
    rr = np.linspace(R0, r_end, 20001)
    uu = sol.sol(rr)[0]
    below = np.flatnonzero(uu <= match_level * lo)
    if below.size == 0:
        raise BracketNotFound("bracketed trajectory never decays to the matching level")
    r_m = rr[below[0]]
    if r_m > 0.8 * r_end:
        raise BracketNotFound("matching point too close to the departure of the trajectory")
    y_m = sol.sol(r_m)
    nu = 0.5 * (N - 2)
    c = y_m[0] / (r_m**-nu * special.kv(nu, r_m))
    omega = sphere_area(N)

    # tail integrals of u'^2, u^2 and F(u), with u = c r^-nu K_nu(r)
    tail_u = lambda r: c * r**-nu * special.kv(nu, r)
    tail_du = lambda r: -c * r**-nu * special.kv(nu + 1, r)
    w = lambda r: r ** (N - 1)
    t_du2 = integrate.quad(lambda r: tail_du(r) ** 2 * w(r), r_m, np.inf, limit=200)[0]
    t_u2 = integrate.quad(lambda r: tail_u(r) ** 2 * w(r), r_m, np.inf, limit=200)[0]
    t_F = integrate.quad(lambda r: float(spec.F(tail_u(r))) * w(r), r_m, np.inf, limit=200)[0]

    # inner integrals from the augmented state at the matching point
    psi = 0.5 * omega * (y_m[2] + t_du2)
    phi = omega * (y_m[3] + t_F) - 0.5 * omega * (y_m[4] + t_u2)
    keep = rr <= r_m
    return ShootingResult(
        dim=N,
        u0=0.5 * (lo + hi),
        u0_bracket=(float(lo), float(hi)),
        r=np.r_[0.0, rr[keep]],
        u=np.r_[lo, uu[keep]],
        r_match=float(r_m),
        tail_coef=float(c),
        psi=float(psi),
        phi=float(phi),
    )
