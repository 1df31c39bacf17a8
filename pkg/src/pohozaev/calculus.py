"""Differential and rearrangement primitives on grid functions.

Energies come with matching gradients.  A gradient here is the covector
``dE/du_j`` with respect to nodal values, i.e. quadrature weight times the
pointwise Euler-Lagrange density.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import GridTooCoarse
from .grids import BoxGrid, GridFunction, RadialGrid, sphere_area

ALIAS_FRACTION = 0.01
SCHEME_MISMATCH = 0.05


# ---------------------------------------------------------------------------
# symmetric decreasing rearrangement


def _steiner(u: GridFunction) -> np.ndarray:
    # exact permutation per axis: largest value at the centre node, then
    # alternating +1, -1, +2, -2, ...; sorting along one axis keeps the
    # earlier axes ordered, so a single sweep suffices
    out = np.maximum(u.values, 0.0)
    for axis in range(u.grid.dim):
        desc = -np.sort(-out, axis=axis)
        out = np.take(desc, u.grid.axis_rank(axis), axis=axis)
    return out


def _sorted_average(u: GridFunction, target_weights: np.ndarray) -> np.ndarray:
    # decreasing step profile of u^+ against cumulative cell volume, averaged
    # over each target cell: exact for the integral of u^+, identity on
    # monotone radial input
    v = np.maximum(u.values, 0.0).ravel()
    w = np.broadcast_to(u.grid.weights, u.grid.shape).ravel()
    order = np.argsort(-v, kind="stable")
    c = np.r_[0.0, np.cumsum(w[order])]
    mass = np.r_[0.0, np.cumsum(v[order] * w[order])]
    edges = np.minimum(np.r_[0.0, np.cumsum(target_weights)], c[-1])
    out = np.diff(np.interp(edges, c, mass)) / target_weights
    return np.minimum.accumulate(np.maximum(out, 0.0))


def symmetrize(u: GridFunction, grid=None) -> GridFunction:
    """Symmetric decreasing rearrangement of ``u^+ = max(u, 0)``.

    On box grids this is Steiner symmetrization along every axis, realised as
    an exact permutation of the samples, so every integral of ``u^+`` is kept
    to rounding.  On radial grids the samples are sorted in decreasing order
    against cumulative cell volumes and the resulting step profile is
    averaged over each cell; level-set volumes are kept to within one cell.

    ``grid`` may name a radial grid of the same dimension as the input.
    """
    target = u.grid if grid is None else grid
    if target is u.grid and isinstance(u.grid, BoxGrid):
        return GridFunction(u.grid, _steiner(u), monotone_flag=True)
    if not isinstance(target, RadialGrid) or target.dim != u.grid.dim:
        raise ValueError("symmetrize targets the input grid or a radial grid of the same dimension")
    return GridFunction(target, _sorted_average(u, target.weights), monotone_flag=True)


# ---------------------------------------------------------------------------
# Fourier symbols on periodic box grids


def wavenumbers_squared(grid: BoxGrid) -> np.ndarray:
    ks = [2 * np.pi * np.fft.fftfreq(m, d=h) for m, h in zip(grid.shape, grid.spacing)]
    mesh = np.meshgrid(*ks, indexing="ij")
    return sum(k**2 for k in mesh)


def fractional_symbol(grid: BoxGrid, s: float) -> np.ndarray:
    """|xi|^(2s) on the DFT lattice (equal to 1 everywhere when s = 0)."""
    return wavenumbers_squared(grid) ** s


def laplacian_symbol(grid: BoxGrid) -> np.ndarray:
    """Symbol of the forward-difference Laplacian, consistent with the edge energies."""
    parts = []
    for i, (m, h) in enumerate(zip(grid.shape, grid.spacing)):
        k = 2 * np.pi * np.fft.fftfreq(m)
        shape = [1] * grid.dim
        shape[i] = m
        parts.append(((2 - 2 * np.cos(k)) / h**2).reshape(shape))
    return sum(np.broadcast_to(p, grid.shape) for p in parts)


def _high_band(grid: BoxGrid) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    for i, m in enumerate(grid.shape):
        frac = np.abs(np.fft.fftfreq(m)) / 0.5
        shape = [1] * grid.dim
        shape[i] = m
        mask |= np.broadcast_to((frac > 2.0 / 3.0).reshape(shape), grid.shape)
    return mask


def _as_box(u: GridFunction) -> GridFunction:
    if isinstance(u.grid, BoxGrid):
        return u
    # embed a radial profile in a symmetric box of matching resolution
    g = u.grid
    M = 2 * (g.size - 1)
    box = BoxGrid.centered(g.dim, g.R, M)
    vals = np.interp(box.distance, g.radii, u.values, right=0.0)
    return GridFunction(box, vals)


def fractional_seminorm(u: GridFunction, s: float, check: bool = True) -> float:
    """``int |xi|^(2s) |u_hat|^2 dxi`` with the unitary Fourier transform.

    This is twice the quadratic form psi_s(u) (normalization constant omitted).
    Radial inputs are first embedded in a symmetric box.
    """
    if not 0.0 <= s < 1.0:
        raise ValueError("s must lie in [0, 1)")
    u = _as_box(u)
    g = u.grid
    U = np.fft.fftn(u.values)
    dens = fractional_symbol(g, s) * (U.real**2 + U.imag**2)
    total = float(np.sum(dens)) * g.cell_volume / g.size
    if check and total > 0:
        high = float(np.sum(dens[_high_band(g)])) * g.cell_volume / g.size
        if high > ALIAS_FRACTION * total:
            raise GridTooCoarse(
                f"top third of the spectrum carries {high / total:.2%} of the s={s} seminorm"
            )
    return total


def apply_fractional(values: np.ndarray, grid: BoxGrid, s: float) -> np.ndarray:
    """Pointwise (-Delta)^s applied spectrally."""
    return np.real(np.fft.ifftn(fractional_symbol(grid, s) * np.fft.fftn(values)))


def fractional_gradient(u: GridFunction, s: float) -> np.ndarray:
    """Covector of ``psi_s = fractional_seminorm / 2``."""
    return u.grid.cell_volume * apply_fractional(u.values, u.grid, s)


# ---------------------------------------------------------------------------
# Gradient energies


def _difference(v: np.ndarray, axis: int, h: float, scheme: str) -> np.ndarray:
    if scheme == "forward":
        return (np.roll(v, -1, axis=axis) - v) / h
    if scheme == "centered":
        return (np.roll(v, -1, axis=axis) - np.roll(v, 1, axis=axis)) / (2 * h)
    raise ValueError(f"unknown difference scheme {scheme!r}")


def _regularized_abs(d: np.ndarray, delta: float) -> np.ndarray:
    if delta == 0:
        return np.abs(d)
    return np.sqrt(d * d + delta * delta) - delta


def _axis_energies(u: GridFunction, p: Sequence[float], delta: float, scheme: str) -> list:
    g = u.grid
    out = []
    for i, pi in enumerate(p):
        d = _difference(u.values, i, g.spacing[i], scheme)
        out.append(float(np.sum(_regularized_abs(d, delta) ** pi)) * g.cell_volume / pi)
    return out


def anisotropic_energy(
    u: GridFunction,
    p: Sequence[float],
    delta: float = 0.0,
    scheme: str = "forward",
    check: bool = True,
) -> list:
    """Per-axis energies ``(1/p_i) int |d_i u|^{p_i} dx`` on a periodic box.

    Derivatives are edge (forward) differences by default; with ``check`` the
    centred-difference energies are computed too and a disagreement beyond 5%
    on any axis raises :class:`GridTooCoarse`.
    """
    if not isinstance(u.grid, BoxGrid):
        raise TypeError("anisotropic energies need a box grid")
    if len(p) != u.grid.dim:
        raise ValueError("one exponent per axis is required")
    energies = _axis_energies(u, p, delta, scheme)
    if check:
        other = "centered" if scheme == "forward" else "forward"
        alt = _axis_energies(u, p, delta, other)
        for i, (a, b) in enumerate(zip(energies, alt)):
            scale_ = max(abs(a), abs(b))
            if scale_ > 0 and abs(a - b) > SCHEME_MISMATCH * scale_:
                raise GridTooCoarse(
                    f"axis {i}: forward and centred energies differ by {abs(a - b) / scale_:.1%}"
                )
    return energies


def anisotropic_gradient(u: GridFunction, axis: int, p: float, delta: float = 0.0) -> np.ndarray:
    """Covector of the forward-difference energy on one axis."""
    g = u.grid
    h = g.spacing[axis]
    d = _difference(u.values, axis, h, "forward")
    if delta == 0:
        flux = np.abs(d) ** (p - 2) * d if p >= 2 else np.sign(d) * np.abs(d) ** (p - 1)
    else:
        root = np.sqrt(d * d + delta * delta)
        flux = (root - delta) ** (p - 1) * d / root
    return g.cell_volume * (np.roll(flux, 1, axis=axis) - flux) / h


def radial_stiffness(grid: RadialGrid) -> np.ndarray:
    """Banded (3, n) form of the matrix S with ``dirichlet_energy = u.S.u / 2``."""
    c = grid.cell_volumes / grid.dr**2
    n = grid.size
    ab = np.zeros((3, n))
    ab[1, :-1] += c
    ab[1, 1:] += c
    ab[0, 1:] = -c
    ab[2, :-1] = -c
    return ab


def radial_stiffness_apply(grid: RadialGrid, values: np.ndarray) -> np.ndarray:
    c = grid.cell_volumes / grid.dr**2
    flux = c * np.diff(values)
    out = np.zeros_like(values)
    out[:-1] -= flux
    out[1:] += flux
    return out


def dirichlet_energy(u: GridFunction, check: bool = False) -> float:
    """``(1/2) int |grad u|^2 dx``.

    Radial grids differentiate in r on each shell and weight by the exact shell
    volume; box grids use the p = 2 anisotropic energies summed over axes.
    """
    g = u.grid
    if isinstance(g, RadialGrid):
        du = np.diff(u.values) / g.dr
        return 0.5 * float(np.sum(g.cell_volumes * du * du))
    return float(sum(anisotropic_energy(u, [2.0] * g.dim, check=check)))


def dirichlet_gradient(u: GridFunction) -> np.ndarray:
    g = u.grid
    if isinstance(g, RadialGrid):
        return radial_stiffness_apply(g, u.values)
    return sum(anisotropic_gradient(u, i, 2.0) for i in range(g.dim))


def negative_laplacian(u: GridFunction) -> np.ndarray:
    """Pointwise discrete -Delta u consistent with :func:`dirichlet_energy`."""
    return dirichlet_gradient(u) / np.broadcast_to(u.grid.weights, u.grid.shape)


def solve_radial_helmholtz(grid: RadialGrid, rhs: np.ndarray, mass: float = 1.0) -> np.ndarray:
    """Solve ``(S + mass * diag(w)) x = rhs`` (the H^1 Riesz map on a radial grid)."""
    ab = radial_stiffness(grid)
    ab[1] += mass * grid.weights
    return solve_banded((1, 1), ab, rhs)


__all__ = [
    "symmetrize",
    "fractional_seminorm",
    "fractional_symbol",
    "fractional_gradient",
    "apply_fractional",
    "laplacian_symbol",
    "wavenumbers_squared",
    "anisotropic_energy",
    "anisotropic_gradient",
    "dirichlet_energy",
    "dirichlet_gradient",
    "negative_laplacian",
    "radial_stiffness",
    "radial_stiffness_apply",
    "solve_radial_helmholtz",
    "sphere_area",
]
