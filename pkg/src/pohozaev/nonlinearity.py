"""Nonlinearities f with primitive F, possibly with finitely many jumps.

All nonlinearities vanish on s < 0 (nonnegative solutions are sought).  The
convention at a jump point ``a`` is right-continuity, ``f(a) = f(a+)``; the
generalized-gradient envelopes at ``a`` are ``[min(f(a-), f(a+)), max(...)]``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .errors import EpsilonTooLarge
from .grids import GridFunction


@dataclass(frozen=True)
class NonlinearitySpec:
    """A pointwise nonlinearity with growth constants ``|f(s)| <= A|s| + B|s|^q``.

    ``f`` and ``F`` are vectorized maps; ``F(s) = int_0^s f``.  ``jump_points``
    and ``jump_heights`` describe ``f(a+) - f(a-)`` at each discontinuity.
    """

    name: str
    f: Callable
    F: Callable
    A: float
    B: float
    q: float
    jump_points: Tuple[float, ...] = ()
    jump_heights: Tuple[float, ...] = ()
    tau: Optional[float] = None
    source: object = field(default=None, compare=False, repr=False)

    @property
    def continuous(self) -> bool:
        return not self.jump_points

    def __call__(self, s):
        return self.f(s)

    def f_lower(self, s):
        return self._envelope(s, np.minimum)

    def f_upper(self, s):
        return self._envelope(s, np.maximum)

    def _envelope(self, s, pick):
        s = np.asarray(s, dtype=float)
        out = np.asarray(self.f(s), dtype=float).copy()
        for a, h in zip(self.jump_points, self.jump_heights):
            at = s == a
            if np.any(at):
                right = self.f(np.asarray(a))
                out = np.where(at, pick(right - h, right), out)
        return out

    def window_envelope(self, s, radius: float, samples: int = 201):
        """Sampled (min, max) of f over ``[s - radius, s + radius]``."""
        s = np.asarray(s, dtype=float)
        offs = np.linspace(-radius, radius, samples)
        vals = self.f(s[..., None] + offs)
        lo, hi = vals.min(axis=-1), vals.max(axis=-1)
        lo = np.minimum(lo, self.f_lower(s))
        hi = np.maximum(hi, self.f_upper(s))
        return lo, hi


# ---------------------------------------------------------------------------
# builtins


def _pos(s):
    return np.maximum(np.asarray(s, dtype=float), 0.0)


def power(p: float, name: Optional[str] = None) -> NonlinearitySpec:
    """``f(s) = s^p`` for s >= 0."""
    p = float(p)
    return NonlinearitySpec(
        name=name or f"power({p:g})",
        f=lambda s: _pos(s) ** p,
        F=lambda s: _pos(s) ** (p + 1) / (p + 1),
        A=1.0,
        B=1.0,
        q=p,
        source=name or f"power({p:g})",
    )


def cubic() -> NonlinearitySpec:
    return power(3.0, name="cubic")


def cubic_jump(a: float = 1.0, h: float = 1.0) -> NonlinearitySpec:
    """``f(s) = s^3 + h 1{s >= a}`` for s >= 0."""
    a, h = float(a), float(h)
    if a <= 0:
        raise ValueError("jump point must be positive")
    name = f"cubic-jump({a:g},{h:g})"
    return NonlinearitySpec(
        name=name,
        f=lambda s: _pos(s) ** 3 + h * (np.asarray(s) >= a),
        F=lambda s: _pos(s) ** 4 / 4 + h * np.maximum(np.asarray(s, dtype=float) - a, 0.0),
        A=max(1.0, abs(h) / a),
        B=1.0,
        q=3.0,
        jump_points=(a,),
        jump_heights=(h,),
        source=name,
    )


def with_jumps(base: NonlinearitySpec, jumps: Sequence[Tuple[float, float]]) -> NonlinearitySpec:
    """``base`` plus ``h 1{s >= a}`` for every ``(a, h)`` in ``jumps``."""
    jumps = tuple((float(a), float(h)) for a, h in jumps)
    if not jumps:
        return base
    if any(a <= 0 for a, _ in jumps):
        raise ValueError("jump points must be positive")
    if len({a for a, _ in jumps}) != len(jumps):
        raise ValueError("jump points must be distinct")
    jumps = tuple(sorted(jumps))
    pts = np.array([a for a, _ in jumps])
    hts = np.array([h for _, h in jumps])

    def f(s):
        s = np.asarray(s, dtype=float)
        return base.f(s) + np.sum(hts * (s[..., None] >= pts), axis=-1)

    def F(s):
        s = np.asarray(s, dtype=float)
        return base.F(s) + np.sum(hts * np.maximum(s[..., None] - pts, 0.0), axis=-1)

    label = ",".join(f"({a:g},{h:g})" for a, h in jumps)
    A = max([base.A] + [abs(h) / a for a, h in jumps])
    return NonlinearitySpec(
        name=f"{base.name}+jumps{label}",
        f=f,
        F=F,
        A=A,
        B=base.B,
        q=base.q,
        jump_points=base.jump_points + tuple(float(a) for a in pts),
        jump_heights=base.jump_heights + tuple(float(h) for h in hts),
        source={"base": base.source, "jumps": [list(j) for j in jumps]},
    )


def zero() -> NonlinearitySpec:
    return NonlinearitySpec("zero", lambda s: np.zeros_like(np.asarray(s, float)),
                            lambda s: np.zeros_like(np.asarray(s, float)), 1.0, 1.0, 2.0, source="zero")


def linear() -> NonlinearitySpec:
    return power(1.0, name="linear")


def piecewise_polynomial(
    breaks: Sequence[float],
    coeffs: Sequence[Sequence[float]],
    A: float,
    B: float,
    q: float,
    name: str = "table",
) -> NonlinearitySpec:
    """Piecewise polynomial on s >= 0.

    ``coeffs[k]`` lists ascending-power coefficients on ``[breaks[k-1], breaks[k])``
    with ``breaks[-1] = 0`` and ``breaks[len] = inf`` implied.
    """
    breaks = [float(b) for b in breaks]
    if any(b <= 0 for b in breaks) or any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
        raise ValueError("breaks must be positive and increasing")
    if len(coeffs) != len(breaks) + 1:
        raise ValueError("need one coefficient list per piece")
    polys = [np.polynomial.Polynomial([float(c) for c in cs]) for cs in coeffs]
    prims = [p.integ() for p in polys]
    edges = [0.0] + breaks
    # F at the start of each piece
    offsets = [0.0]
    for k, b in enumerate(breaks):
        offsets.append(offsets[-1] + prims[k](b) - prims[k](edges[k]))
    heights = tuple(float(polys[k + 1](b) - polys[k](b)) for k, b in enumerate(breaks))
    jumps = tuple((b, hgt) for b, hgt in zip(breaks, heights) if hgt != 0.0)

    def piece(s):
        return np.searchsorted(np.asarray(breaks), s, side="right")

    def f(s):
        s = np.asarray(s, dtype=float)
        k = piece(s)
        out = np.zeros_like(s)
        for i, p in enumerate(polys):
            out = np.where(k == i, p(s), out)
        return np.where(s > 0, out, 0.0)

    def F(s):
        s = np.asarray(s, dtype=float)
        sp = np.maximum(s, 0.0)
        k = piece(sp)
        out = np.zeros_like(sp)
        for i, p in enumerate(prims):
            out = np.where(k == i, offsets[i] + p(sp) - p(edges[i]), out)
        return out

    table = {"kind": "table", "breaks": breaks, "coeffs": [list(map(float, c)) for c in coeffs],
             "A": float(A), "B": float(B), "q": float(q)}
    return NonlinearitySpec(
        name=name,
        f=f,
        F=F,
        A=float(A),
        B=float(B),
        q=float(q),
        jump_points=tuple(j[0] for j in jumps),
        jump_heights=tuple(j[1] for j in jumps),
        source=table,
    )


_BUILTIN = re.compile(r"^\s*([a-z-]+)\s*(?:\(([^)]*)\))?\s*$")


def from_name(text: str) -> NonlinearitySpec:
    """Parse ``cubic``, ``cubic-jump(a,h)``, ``power(p)``, ``zero`` or ``linear``."""
    m = _BUILTIN.match(text)
    if not m:
        raise ValueError(f"cannot parse nonlinearity {text!r}")
    kind, args = m.group(1), m.group(2)
    vals = [float(x) for x in args.split(",")] if args else []
    if kind == "cubic" and not vals:
        return cubic()
    if kind == "cubic-jump" and len(vals) in (0, 2):
        return cubic_jump(*vals)
    if kind == "power" and len(vals) == 1:
        return power(vals[0])
    if kind == "zero" and not vals:
        return zero()
    if kind == "linear" and not vals:
        return linear()
    raise ValueError(f"unknown nonlinearity {text!r}")


def from_config(obj) -> NonlinearitySpec:
    if isinstance(obj, str):
        return from_name(obj)
    if isinstance(obj, dict) and obj.get("kind") == "table":
        return piecewise_polynomial(obj["breaks"], obj["coeffs"], obj["A"], obj["B"], obj["q"])
    raise ValueError(f"unsupported nonlinearity description {obj!r}")


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    detail: str
    witness: Optional[float] = None


@dataclass(frozen=True)
class NonlinearityReport:
    spec_name: str
    conditions: Tuple[ConditionResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


def primitive_G(spec: NonlinearitySpec, absorption: float = 2.0):
    """``G(s) = F(s) - |s|^absorption / absorption``."""
    return lambda s: spec.F(s) - np.abs(np.asarray(s, dtype=float)) ** absorption / absorption


def find_tau(spec: NonlinearitySpec, absorption: float = 2.0, s_max: float = 1e3) -> Optional[float]:
    """Smallest sampled tau with G(tau) > 0 (log grid), or None."""
    if spec.tau is not None:
        return spec.tau
    s = np.geomspace(1e-3, s_max, 4000)
    G = primitive_G(spec, absorption)(s)
    pos = np.flatnonzero(G > 0)
    if pos.size == 0:
        return None
    # step a little past the first crossing for a robust margin
    return float(s[min(pos[0] + 40, s.size - 1)])


def critical_growth(dim: int, top_order: float = 1.0) -> float:
    """Upper bound for the growth exponent q: ``2*_{s} - 1`` (inf if N <= 2s)."""
    if dim <= 2 * top_order:
        return math.inf
    return 2.0 * dim / (dim - 2 * top_order) - 1.0


def validate_nonlinearity(
    spec: NonlinearitySpec,
    critical: float = math.inf,
    lower: float = 1.0,
    absorption: float = 2.0,
) -> NonlinearityReport:
    """Sample the growth and sign conditions on f.

    ``q`` must lie in ``(lower, critical)``.  (f4) integrates
    ``g(s) = f(s) - s^(absorption-1)`` adaptively over ``[0, tau]``.
    """
    out = []
    dyadic = 2.0 ** -np.arange(1, 41)
    ratio = np.abs(spec.f(dyadic)) / dyadic
    tail = ratio[-20:]
    # f(s)/s -> 0: the ratio must keep shrinking along the dyadic tail
    with np.errstate(divide="ignore"):
        slope = np.polyfit(np.log(dyadic[-20:]), np.log(np.maximum(tail, 1e-300)), 1)[0]
    ok1 = bool(np.all(np.diff(tail) <= 1e-15) and (tail[-1] == 0 or slope > 0.02))
    out.append(ConditionResult("f1", ok1, f"|f(s)/s| at s=2^-40: {tail[-1]:.3e}, log-slope {slope:.3f}",
                               float(tail[-1])))

    big = np.geomspace(1e2, 1e6, 50)
    grow = np.abs(spec.f(big)) / big**spec.q
    bounded = bool(np.all(np.isfinite(grow)) and grow[-1] <= 2 * grow[0] + 1e-12)
    in_range = lower < spec.q < critical
    out.append(ConditionResult(
        "f2", bounded and in_range,
        f"q={spec.q:g} in ({lower:g}, {critical:g}): {in_range}; |f|/s^q bounded on [1e2,1e6]: {bounded}",
        spec.q,
    ))

    pos = np.geomspace(1e-8, 1e4, 2000)
    fv = spec.f(pos)
    bad = pos[fv <= 0]
    out.append(ConditionResult("f3", bad.size == 0, "f(s) > 0 on log-spaced s in [1e-8,1e4]",
                               float(bad[0]) if bad.size else None))

    tau = find_tau(spec, absorption)
    if tau is None:
        out.append(ConditionResult("f4", False, "no tau with G(tau) > 0 found on [1e-3, 1e3]"))
    else:
        g = lambda s: float(spec.f(np.asarray(s))) - s ** (absorption - 1)
        pts = [a for a in spec.jump_points if 0 < a < tau] or None
        G_tau, _ = integrate.quad(g, 0.0, tau, points=pts, limit=200)
        out.append(ConditionResult("f4", G_tau > 0, f"G({tau:g}) = {G_tau:.6g}", tau))

    s = np.concatenate([-np.geomspace(1e-6, 1e4, 400), np.geomspace(1e-8, 1e4, 2000)])
    lhs = np.abs(spec.f(s))
    rhs = spec.A * np.abs(s) + spec.B * np.abs(s) ** spec.q
    viol = s[lhs > rhs * (1 + 1e-12)]
    out.append(ConditionResult("f7", viol.size == 0 and spec.A > 0 and spec.B > 0,
                               f"|f| <= {spec.A:g}|s| + {spec.B:g}|s|^{spec.q:g} on samples",
                               float(viol[0]) if viol.size else None))
    return NonlinearityReport(spec.name, tuple(out))


# ---------------------------------------------------------------------------
# mollification


def _ramp(x, eps):
    return np.clip((np.asarray(x, dtype=float) + eps) / (2 * eps), 0.0, 1.0)


def _ramp_primitive(x, eps):
    x = np.asarray(x, dtype=float)
    return np.where(x < -eps, 0.0, np.where(x > eps, x, (x + eps) ** 2 / (4 * eps)))


@dataclass(frozen=True)
class MollifiedNonlinearity:
    base: NonlinearitySpec
    epsilon: float
    f_eps: Callable
    F_eps: Callable

    def as_spec(self) -> NonlinearitySpec:
        """Continuous surrogate usable wherever a smooth nonlinearity is expected."""
        return NonlinearitySpec(
            name=f"{self.base.name}~eps={self.epsilon:g}",
            f=self.f_eps,
            F=self.F_eps,
            A=self.base.A,
            B=self.base.B + (1.0 if self.base.jump_points else 0.0),
            q=self.base.q,
            tau=self.base.tau,
            source=self.base.source,
        )


def min_jump_gap(spec: NonlinearitySpec) -> float:
    pts = sorted(set([0.0, *spec.jump_points]))
    if len(pts) < 2:
        return math.inf
    return float(np.min(np.diff(pts)))


def mollify(spec: NonlinearitySpec, eps: float) -> MollifiedNonlinearity:
    """Replace every jump by its box-kernel average of width ``2 eps``.

    Away from the jumps (distance > eps) the result equals ``f``; at a jump
    it takes the midpoint ``(f(a-) + f(a+)) / 2``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not spec.jump_points:
        return MollifiedNonlinearity(spec, eps, spec.f, spec.F)
    gap = min_jump_gap(spec)
    if eps >= 0.5 * gap:
        raise EpsilonTooLarge(f"eps={eps:g} must be below half the minimal jump gap {gap:g}")
    jumps = list(zip(spec.jump_points, spec.jump_heights))

    def f_eps(s):
        s = np.asarray(s, dtype=float)
        out = np.asarray(spec.f(s), dtype=float)
        for a, h in jumps:
            out = out - h * (s >= a) + h * _ramp(s - a, eps)
        return out

    def F_eps(s):
        s = np.asarray(s, dtype=float)
        out = np.asarray(spec.F(s), dtype=float)
        for a, h in jumps:
            out = out - h * np.maximum(s - a, 0.0) + h * _ramp_primitive(s - a, eps)
        return out

    return MollifiedNonlinearity(spec, float(eps), f_eps, F_eps)


def inclusion_check(spec: NonlinearitySpec, u: GridFunction, residual: np.ndarray, tol: float) -> float:
    """Measure of the cells where ``residual`` leaves ``[f_lower(u) - tol, f_upper(u) + tol]``."""
    res = np.asarray(residual, dtype=float)
    lo = spec.f_lower(u.values) - tol
    hi = spec.f_upper(u.values) + tol
    bad = (res < lo) | (res > hi)
    w = np.broadcast_to(u.grid.weights, u.grid.shape)
    return float(np.sum(w[bad]))
