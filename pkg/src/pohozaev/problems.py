"""The three shipped problem families as :class:`FunctionalFamily` values.

* ``FractionalSum``: ``sum_i (-Delta)^{s_i} u + u = f(u)`` on a periodic box.
* ``Anisotropic``: ``-sum_i d_i(|d_i u|^{p_i-2} d_i u) + |u|^{p_1-2} u = f(u)``.
* ``Classical``: ``-Delta u + u = f(u)`` (``f`` possibly discontinuous), on a
  radial or box grid.

Each family also exposes a pointwise residual field and a preconditioner
(the linearized quadratic part plus the mass term) used for descent
directions and dual norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from . import calculus as calc
from .core import FunctionalFamily
from .errors import NonadmissibleExponents
from .grids import BoxGrid, GridFunction, RadialGrid, quad
from .nonlinearity import NonlinearitySpec, cubic, validate_nonlinearity


@dataclass(frozen=True)
class GridSpec:
    kind: str = "radial"
    R: float = 20.0
    M: int = 4096

    def build(self, dim: int):
        if self.kind == "radial":
            return RadialGrid.uniform(dim, self.R, self.M)
        if self.kind == "box":
            return BoxGrid.centered(dim, self.R, self.M)
        raise ValueError(f"unknown grid kind {self.kind!r}")

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.kind, self.R, self.M * factor)


@dataclass(frozen=True)
class FractionalSum:
    s: Tuple[float, ...]
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(float(x) for x in self.s))

    @property
    def kind(self) -> str:
        return "fractional"

    @property
    def lambdas(self):
        return tuple(self.dim - 2 * si for si in self.s)

    @property
    def critical_q(self) -> float:
        """``2*_{s_n} - 1``."""
        sn = max(self.s)
        return 2 * self.dim / (self.dim - 2 * sn) - 1 if self.dim > 2 * sn else math.inf

    @property
    def lower_q(self) -> float:
        return 1.0

    @property
    def absorption(self) -> float:
        return 2.0


@dataclass(frozen=True)
class Anisotropic:
    p: Tuple[float, ...]
    dim: int = 2
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))

    @property
    def kind(self) -> str:
        return "anisotropic"

    @property
    def lambdas(self):
        return tuple(self.dim - pi for pi in self.p)

    @property
    def critical_q(self) -> float:
        """``p* = N / (sum 1/p_i - 1)``."""
        d = sum(1.0 / pi for pi in self.p) - 1.0
        return self.dim / d if d > 0 else math.inf

    @property
    def lower_q(self) -> float:
        return self.p[0]

    @property
    def absorption(self) -> float:
        return self.p[0]


@dataclass(frozen=True)
class Classical:
    dim: int = 3

    @property
    def kind(self) -> str:
        return "classical"

    @property
    def lambdas(self):
        return (self.dim - 2.0,)

    @property
    def critical_q(self) -> float:
        return (self.dim + 2) / (self.dim - 2) if self.dim > 2 else math.inf

    @property
    def lower_q(self) -> float:
        return 1.0

    @property
    def absorption(self) -> float:
        return 2.0


Family = Union[FractionalSum, Anisotropic, Classical]

DEFAULT_GRIDS = {
    "fractional": GridSpec("box", 20.0, 8192),
    "anisotropic": GridSpec("box", 10.0, 256),
    "classical": GridSpec("radial", 20.0, 4096),
}


@dataclass(frozen=True)
class ProblemInstance:
    family: Family
    nonlinearity: NonlinearitySpec = field(default_factory=cubic)
    grid: Optional[GridSpec] = None

    def __post_init__(self):
        if self.grid is None:
            object.__setattr__(self, "grid", DEFAULT_GRIDS[self.family.kind])

    @property
    def dim(self) -> int:
        return self.family.dim

    def build_grid(self):
        return self.grid.build(self.dim)

    def with_grid(self, grid: GridSpec) -> "ProblemInstance":
        return ProblemInstance(self.family, self.nonlinearity, grid)

    def with_nonlinearity(self, spec: NonlinearitySpec) -> "ProblemInstance":
        return ProblemInstance(self.family, spec, self.grid)

    def describe(self) -> dict:
        fam = self.family
        out = {"family": fam.kind, "N": fam.dim, "nonlinearity": self.nonlinearity.name,
               "grid": {"kind": self.grid.kind, "R": self.grid.R, "M": self.grid.M}}
        if isinstance(fam, FractionalSum):
            out["s"] = list(fam.s)
        if isinstance(fam, Anisotropic):
            out["p"] = list(fam.p)
            out["delta"] = fam.delta
        return out


def check_instance(inst: ProblemInstance) -> None:
    """Raise :class:`NonadmissibleExponents` naming the first violated bound."""
    fam = inst.family
    N = fam.dim
    if N < 1:
        raise NonadmissibleExponents("dimension must be positive")
    if isinstance(fam, FractionalSum):
        if not fam.s:
            raise NonadmissibleExponents("at least one s_i is required")
        if list(fam.s) != sorted(fam.s) or fam.s[0] <= 0 or fam.s[-1] >= 1:
            raise NonadmissibleExponents("need 0 < s_1 <= ... <= s_n < 1")
        if not N > 2 * fam.s[-1]:
            raise NonadmissibleExponents(f"N > 2*s_n required (N={N}, s_n={fam.s[-1]:g})")
    elif isinstance(fam, Anisotropic):
        if len(fam.p) != N:
            raise NonadmissibleExponents(f"one exponent per axis required ({len(fam.p)} given, N={N})")
        if list(fam.p) != sorted(fam.p):
            raise NonadmissibleExponents("need p_1 <= ... <= p_N")
        if not (fam.p[0] > 1 and fam.p[-1] < N):
            raise NonadmissibleExponents(f"1 < p_1 and p_N < N required (p={list(fam.p)}, N={N})")
        if not sum(1.0 / pi for pi in fam.p) > 1:
            raise NonadmissibleExponents("sum 1/p_i > 1 required")
        if inst.grid.kind != "box":
            raise NonadmissibleExponents("the anisotropic family needs a box grid")
    elif isinstance(fam, Classical):
        if not N >= 3:
            raise NonadmissibleExponents(f"N >= 3 required so that lambda = N - 2 > 0 (N={N})")
    else:
        raise TypeError(f"unknown family {fam!r}")
    if isinstance(fam, FractionalSum) and inst.grid.kind != "box":
        raise NonadmissibleExponents("the fractional family needs a box grid")
    q = inst.nonlinearity.q
    if not fam.lower_q < q < fam.critical_q:
        raise NonadmissibleExponents(
            f"growth exponent q={q:g} must lie in ({fam.lower_q:g}, {fam.critical_q:g})"
        )


def validate_instance(inst: ProblemInstance):
    """Nonlinearity report with the family's growth window and absorption power."""
    fam = inst.family
    return validate_nonlinearity(inst.nonlinearity, fam.critical_q, fam.lower_q, fam.absorption)


# ---------------------------------------------------------------------------
# families


def _weights(u: GridFunction) -> np.ndarray:
    return np.broadcast_to(u.grid.weights, u.grid.shape)


def _box_precondition(sym_fn):
    def solve(u: GridFunction, g: np.ndarray) -> np.ndarray:
        sym = sym_fn(u.grid) + 1.0
        return np.real(np.fft.ifftn(np.fft.fftn(g) / (u.grid.cell_volume * sym)))

    return solve


def _radial_precondition(u: GridFunction, g: np.ndarray) -> np.ndarray:
    return calc.solve_radial_helmholtz(u.grid, g)


def _dual_norm(precondition):
    def norm(u: GridFunction, g: np.ndarray) -> float:
        return math.sqrt(max(float(np.sum(g * precondition(u, g))), 0.0))

    return norm


def _fractional_symbols(s_list):
    def total(grid: BoxGrid):
        return sum(calc.fractional_symbol(grid, s) for s in s_list)

    return total


def build_family(inst: ProblemInstance, check: bool = True) -> FunctionalFamily:
    """Energy functionals, exponents, gradients and metric hooks for ``inst``."""
    if check:
        check_instance(inst)
    fam = inst.family
    spec = inst.nonlinearity
    N = fam.dim

    if isinstance(fam, FractionalSum):
        absorb = 2.0
        psi = tuple((lambda u, s=s: 0.5 * calc.fractional_seminorm(u, s, check=False)) for s in fam.s)
        dpsi = tuple((lambda u, s=s: calc.fractional_gradient(u, s)) for s in fam.s)
        names = tuple(f"psi_s={s:g}" for s in fam.s)
        precond = _box_precondition(_fractional_symbols(fam.s))

        def norm(u):
            return math.sqrt(quad(u, np.square) + sum(2 * f(u) for f in psi))

    elif isinstance(fam, Anisotropic):
        absorb = fam.p[0]
        psi = tuple(
            (lambda u, i=i: calc.anisotropic_energy(u, fam.p, fam.delta, check=False)[i]) for i in range(N)
        )
        dpsi = tuple((lambda u, i=i: calc.anisotropic_gradient(u, i, fam.p[i], fam.delta)) for i in range(N))
        names = tuple(f"psi_x{i + 1}" for i in range(N))
        precond = _box_precondition(calc.laplacian_symbol)

        def norm(u):
            parts = calc.anisotropic_energy(u, fam.p, fam.delta, check=False)
            out = sum((pi * e) ** (1.0 / pi) for pi, e in zip(fam.p, parts))
            return out + quad(u, lambda v: np.abs(v) ** absorb) ** (1.0 / absorb)

    else:
        absorb = 2.0
        psi = (calc.dirichlet_energy,)
        dpsi = (calc.dirichlet_gradient,)
        names = ("psi_grad",)
        if inst.grid.kind == "radial":
            precond = _radial_precondition
        else:
            precond = _box_precondition(calc.laplacian_symbol)

        def norm(u):
            return math.sqrt(quad(u, np.square) + 2 * calc.dirichlet_energy(u))

    def phi(u):
        return quad(u, lambda x: spec.F(x) - np.abs(x) ** absorb / absorb)

    def dphi(u):
        v = u.values
        return _weights(u) * (spec.f(v) - np.sign(v) * np.abs(v) ** (absorb - 1))

    return FunctionalFamily(
        psi_evals=psi,
        phi_eval=phi,
        lambdas=fam.lambdas,
        lambda_phi=float(N),
        psi_grads=dpsi,
        phi_grad=dphi,
        name=f"{fam.kind}:{spec.name}",
        norm=norm,
        precondition=precond,
        dual_norm=_dual_norm(precond),
        psi_names=names,
    )


def operator_field(inst: ProblemInstance, u: GridFunction) -> np.ndarray:
    """Pointwise differential part plus absorption, e.g. ``-Delta u + u``."""
    fam = inst.family
    w = _weights(u)
    if isinstance(fam, FractionalSum):
        lin = sum(calc.apply_fractional(u.values, u.grid, s) for s in fam.s)
        return lin + u.values
    if isinstance(fam, Anisotropic):
        div = sum(calc.anisotropic_gradient(u, i, fam.p[i], fam.delta) for i in range(fam.dim)) / w
        v = u.values
        return div + np.sign(v) * np.abs(v) ** (fam.p[0] - 1)
    return calc.negative_laplacian(u) + u.values


def residual_field(inst: ProblemInstance, u: GridFunction, spec: Optional[NonlinearitySpec] = None) -> np.ndarray:
    """Pointwise Euler-Lagrange defect ``operator_field(u) - f(u)``."""
    spec = inst.nonlinearity if spec is None else spec
    return operator_field(inst, u) - spec.f(u.values)


def grid_diagnostics(inst: ProblemInstance, u: GridFunction) -> dict:
    """Resolution and truncation indicators for a computed solution.

    ``boundary_ratio`` compares the largest value on the outer boundary with
    the peak; ``alias_fraction`` (fractional family) is the share of the top
    third of the spectrum in the seminorm.
    """
    peak = float(np.max(np.abs(u.values))) or 1.0
    if isinstance(u.grid, RadialGrid):
        edge = abs(float(u.values[-1]))
    else:
        edge = 0.0
        for ax in range(u.grid.dim):
            edge = max(edge, float(np.max(np.abs(np.take(u.values, [0, -1], axis=ax)))))
    out = {"boundary_ratio": edge / peak}
    fam = inst.family
    if isinstance(fam, FractionalSum):
        g = u.grid
        U = np.fft.fftn(u.values)
        dens = calc.fractional_symbol(g, fam.s[-1]) * np.abs(U) ** 2
        tot = float(np.sum(dens))
        out["alias_fraction"] = float(np.sum(dens[calc._high_band(g)])) / tot if tot > 0 else 0.0
    if isinstance(fam, Anisotropic):
        fwd = calc.anisotropic_energy(u, fam.p, fam.delta, "forward", check=False)
        cen = calc.anisotropic_energy(u, fam.p, fam.delta, "centered", check=False)
        out["scheme_mismatch"] = max(abs(a - b) / max(abs(a), abs(b), 1e-300) for a, b in zip(fwd, cen))
    return out
