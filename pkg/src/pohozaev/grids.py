"""Discrete function spaces: radial and box grids, grid functions, quadrature.

A :class:`RadialGrid` discretizes radial functions on the ball ``B_R`` of
``R^N``; its node weights integrate against ``omega_N r^(N-1) dr``.  A
:class:`BoxGrid` is a uniform (periodic) tensor grid centred on the origin.

Dilation ``u_t(x) = u(x/t)`` is realised analytically: the values are kept
and the grid coordinates are multiplied by ``t``.  Every functional in this
package is then exactly homogeneous under dilation, up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
from scipy import interpolate, ndimage
from scipy.special import gamma

from .errors import NonFiniteValue

__all__ = [
    "RadialGrid",
    "BoxGrid",
    "GridFunction",
    "sphere_area",
    "ball_volume",
    "quad",
    "scale",
    "resample",
    "zeros_like",
    "is_radially_nonincreasing",
    "to_csv",
    "from_csv",
    "write_csv",
    "read_csv",
]


def sphere_area(dim: int) -> float:
    """Area of the unit sphere in R^dim (2 for dim=1: the two points +-1)."""
    return 2.0 * math.pi ** (dim / 2) / gamma(dim / 2)


def ball_volume(dim: int, radius: float) -> float:
    return sphere_area(dim) * radius**dim / dim


@dataclass(frozen=True, eq=False)
class RadialGrid:
    dim: int
    radii: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise ValueError("radial grid needs at least two radii")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise ValueError("radii must start at 0 and increase strictly")
        r = r.copy()
        r.flags.writeable = False
        object.__setattr__(self, "radii", r)

    @classmethod
    def uniform(cls, dim: int, R: float, M: int) -> "RadialGrid":
        """Nodes r_j = j R / M, j = 0..M."""
        return cls(dim, np.linspace(0.0, R, M + 1))

    kind = "radial"

    @property
    def R(self) -> float:
        return float(self.radii[-1])

    @property
    def size(self) -> int:
        return self.radii.size

    @property
    def shape(self):
        return self.radii.shape

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        """Exact shell volumes between consecutive radii."""
        rn = self.radii**self.dim
        return sphere_area(self.dim) * np.diff(rn) / self.dim

    @cached_property
    def weights(self) -> np.ndarray:
        v = self.cell_volumes
        w = np.zeros(self.size)
        w[:-1] += 0.5 * v
        w[1:] += 0.5 * v
        return w

    @cached_property
    def dr(self) -> np.ndarray:
        return np.diff(self.radii)

    @cached_property
    def distance(self) -> np.ndarray:
        return self.radii

    def dilate(self, t: float) -> "RadialGrid":
        return RadialGrid(self.dim, t * self.radii)

    def describe(self) -> dict:
        return {"kind": "radial", "dim": self.dim, "R": self.R, "M": self.size - 1}


@dataclass(frozen=True, eq=False)
class BoxGrid:
    """Uniform tensor grid with nodes ``origin_i + k h_i``, k = 0..M_i-1.

    With ``origin = -R`` and ``h = 2R/M`` the grid is symmetric about the
    origin under the periodic identification ``-R == R``.
    """

    shape: tuple
    spacing: tuple
    origin: tuple
    periodic: bool = True

    def __post_init__(self):
        shape = tuple(int(m) for m in self.shape)
        spacing = tuple(float(h) for h in self.spacing)
        origin = tuple(float(o) for o in self.origin)
        if not (len(shape) == len(spacing) == len(origin)):
            raise ValueError("shape, spacing and origin must have equal length")
        if any(h <= 0 for h in spacing):
            raise ValueError("spacings must be positive")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    kind = "box"

    @classmethod
    def centered(cls, dim: int, R: float, M: int) -> "BoxGrid":
        h = 2.0 * R / M
        return cls((M,) * dim, (h,) * dim, (-R,) * dim, True)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def extents(self) -> tuple:
        return tuple(h * m for h, m in zip(self.spacing, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.shape, self.cell_volume)

    def coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    @cached_property
    def _offsets(self):
        # integer offsets from the node closest to the origin
        offs = []
        for o, h, m in zip(self.origin, self.spacing, self.shape):
            k0 = int(round(-o / h))
            offs.append(np.arange(m) - k0)
        return offs

    def axis_rank(self, axis: int) -> np.ndarray:
        """Rank of each node along ``axis`` in the order 0, +1, -1, +2, -2, ..."""
        k = self._offsets[axis]
        key = 2 * np.abs(k) - (k > 0)
        return np.argsort(np.argsort(key, kind="stable"), kind="stable")

    @cached_property
    def distance_key(self) -> np.ndarray:
        """Squared distance to the origin; exact integers when spacings agree."""
        grids = np.meshgrid(*self._offsets, indexing="ij")
        if len(set(self.spacing)) == 1:
            return sum(g.astype(np.int64) ** 2 for g in grids)
        return sum((g * h) ** 2 for g, h in zip(grids, self.spacing))

    @cached_property
    def distance(self) -> np.ndarray:
        grids = np.meshgrid(*[self.coords(i) for i in range(self.dim)], indexing="ij")
        return np.sqrt(sum(g**2 for g in grids))

    def dilate(self, t: float) -> "BoxGrid":
        return BoxGrid(
            self.shape,
            tuple(t * h for h in self.spacing),
            tuple(t * o for o in self.origin),
            self.periodic,
        )

    def describe(self) -> dict:
        return {
            "kind": "box",
            "dim": self.dim,
            "R": -self.origin[0],
            "M": self.shape[0],
        }


Grid = Union[RadialGrid, BoxGrid]


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray
    monotone_flag: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != tuple(self.grid.shape):
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("grid function has non-finite samples")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.monotone_flag and not is_radially_nonincreasing(self):
            raise ValueError("monotone_flag set on a function outside the X^r cone")

    def with_values(self, values, monotone_flag: bool = False) -> "GridFunction":
        return GridFunction(self.grid, values, monotone_flag)

    def positive_part(self) -> "GridFunction":
        return GridFunction(self.grid, np.maximum(self.values, 0.0))

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)


def zeros_like(u: GridFunction) -> GridFunction:
    return GridFunction(u.grid, np.zeros(u.grid.shape))


def is_radially_nonincreasing(u: GridFunction, rtol: float = 1e-12) -> bool:
    """Membership in the discrete X^r cone.

    Radial grids: nonnegative and nonincreasing in r.  Box grids: nonnegative
    and nonincreasing along every axis in the order 0, +1, -1, +2, -2, ...
    of offsets from the centre node, which is the image of the per-axis
    symmetric decreasing rearrangement.
    """
    v = u.values
    if np.any(v < 0):
        return False
    slack = rtol * max(float(np.max(np.abs(v))), 1.0)
    if isinstance(u.grid, RadialGrid):
        return bool(np.all(np.diff(v) <= slack))
    for axis in range(u.grid.dim):
        order = np.argsort(u.grid.axis_rank(axis), kind="stable")
        if np.any(np.diff(np.take(v, order, axis=axis), axis=axis) > slack):
            return False
    return True


def quad(u: GridFunction, integrand: Optional[Callable] = None) -> float:
    """Integral of ``integrand(u(x))`` over the grid domain (identity if None)."""
    vals = u.values if integrand is None else integrand(u.values)
    vals = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("integrand produced non-finite values")
    return float(np.sum(vals * u.grid.weights))


def scale(u: GridFunction, t: float) -> GridFunction:
    """Dilation ``u_t(x) = u(x/t)``; ``t = 0`` gives the zero function."""
    if t < 0:
        raise ValueError("dilation factor must be nonnegative")
    if t == 0:
        return GridFunction(u.grid, np.zeros(u.grid.shape))
    if t == 1:
        return u
    return GridFunction(u.grid.dilate(t), u.values, u.monotone_flag)


def resample(u: GridFunction, grid: Grid) -> GridFunction:
    """Interpolate ``u`` onto another grid of the same kind and dimension.

    Radial grids use PCHIP (monotonicity-preserving); box grids use cubic
    splines.  Points outside the source domain take the value zero.
    """
    if isinstance(u.grid, RadialGrid):
        if not isinstance(grid, RadialGrid) or grid.dim != u.grid.dim:
            raise ValueError("radial functions resample onto radial grids")
        # subnormal tails overflow the PCHIP slope means harmlessly
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            f = interpolate.PchipInterpolator(u.grid.radii, u.values, extrapolate=False)
            vals = np.nan_to_num(f(grid.radii), nan=0.0)
        out_flag = u.monotone_flag
        vals = np.maximum(vals, 0.0) if out_flag else vals
        return GridFunction(grid, vals, out_flag and is_radially_nonincreasing(GridFunction(grid, vals)))
    if not isinstance(grid, BoxGrid) or grid.dim != u.grid.dim:
        raise ValueError("box functions resample onto box grids")
    idx = np.meshgrid(
        *[(grid.coords(i) - u.grid.origin[i]) / u.grid.spacing[i] for i in range(grid.dim)],
        indexing="ij",
    )
    vals = ndimage.map_coordinates(u.values, idx, order=3, mode="grid-constant", cval=0.0)
    return GridFunction(grid, vals)


# ---------------------------------------------------------------------------
# CSV serialization

_MAGIC = "# pohozaev-gridfunction v1"


def _fmt(x: float) -> str:
    return repr(float(x))


def to_csv(u: GridFunction) -> str:
    g = u.grid
    lines = [_MAGIC]
    if isinstance(g, RadialGrid):
        lines += [
            "kind,radial",
            f"dim,{g.dim}",
            f"points,{g.size}",
            f"extent,{_fmt(g.R)}",
            f"monotone,{int(u.monotone_flag)}",
            "r,value",
        ]
        lines += [f"{_fmt(r)},{_fmt(v)}" for r, v in zip(g.radii, u.values)]
    else:
        lines += [
            "kind,box",
            f"dim,{g.dim}",
            "shape," + ",".join(str(m) for m in g.shape),
            "extents," + ",".join(_fmt(e) for e in g.extents),
            "spacing," + ",".join(_fmt(h) for h in g.spacing),
            "origin," + ",".join(_fmt(o) for o in g.origin),
            f"periodic,{int(g.periodic)}",
            f"monotone,{int(u.monotone_flag)}",
            "value",
        ]
        lines += [_fmt(v) for v in u.values.ravel()]
    return "\n".join(lines) + "\n"


def from_csv(text: str) -> GridFunction:
    rows = text.splitlines()
    if not rows or rows[0] != _MAGIC:
        raise ValueError("not a grid-function CSV")
    head = {}
    i = 1
    while rows[i] not in ("r,value", "value"):
        key, _, rest = rows[i].partition(",")
        head[key] = rest
        i += 1
    body = rows[i + 1:]
    flag = bool(int(head["monotone"]))
    if head["kind"] == "radial":
        data = np.array([[float(x) for x in line.split(",")] for line in body])
        grid = RadialGrid(int(head["dim"]), data[:, 0])
        return GridFunction(grid, data[:, 1], flag)
    shape = tuple(int(x) for x in head["shape"].split(","))
    grid = BoxGrid(
        shape,
        tuple(float(x) for x in head["spacing"].split(",")),
        tuple(float(x) for x in head["origin"].split(",")),
        bool(int(head["periodic"])),
    )
    vals = np.array([float(x) for x in body]).reshape(shape)
    return GridFunction(grid, vals, flag)


def write_csv(u: GridFunction, path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(to_csv(u))


def read_csv(path) -> GridFunction:
    with open(path, encoding="utf-8") as fh:
        return from_csv(fh.read())
