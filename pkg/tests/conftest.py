import numpy as np
import pytest

from pohozaev.grids import BoxGrid, GridFunction, RadialGrid

# Ground-state energy of -Lap u + u = u^3 in R^3, from the radial shooting
# oracle (u(0) bracketed to 1e-12) and cross-checked by plain quadrature of the
# bracketed profile to 2e-7 relative.  Frozen before the PDE solver existed.
CLASSICAL_CUBIC_ENERGY = 18.897251302545556


def gaussian_box(grid: BoxGrid, width: float = 1.0, center=None) -> GridFunction:
    c = np.zeros(grid.dim) if center is None else np.asarray(center, dtype=float)
    X = np.meshgrid(*[grid.coords(i) for i in range(grid.dim)], indexing="ij")
    r2 = sum((x - ci) ** 2 for x, ci in zip(X, c))
    return GridFunction(grid, np.exp(-r2 / (2 * width**2)))


def gaussian_radial(grid: RadialGrid, width: float = 1.0, amp: float = 1.0) -> GridFunction:
    return GridFunction(grid, amp * np.exp(-grid.radii**2 / (2 * width**2)), monotone_flag=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def box1():
    return BoxGrid.centered(1, 20.0, 2048)


@pytest.fixture
def box2():
    return BoxGrid.centered(2, 10.0, 128)


@pytest.fixture
def radial3():
    return RadialGrid.uniform(3, 20.0, 2048)
