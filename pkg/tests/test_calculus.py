import math

import numpy as np
import pytest
from scipy.special import gamma

from pohozaev import calculus as C
from pohozaev.errors import GridTooCoarse
from pohozaev.grids import BoxGrid, GridFunction, RadialGrid, is_radially_nonincreasing, quad, scale

from conftest import gaussian_box, gaussian_radial


def two_bump_radial(g):
    r = g.radii
    return GridFunction(g, 1.5 * np.exp(-((r - 3.0) ** 2)) + np.exp(-r**2 / 2) - 0.2 * np.exp(-((r - 6) ** 2)))


def random_box(g, rng):
    X = np.meshgrid(*[g.coords(i) for i in range(g.dim)], indexing="ij")
    u = 0
    for _ in range(3):
        c = rng.uniform(-2, 2, g.dim)
        w = rng.uniform(0.5, 1.5)
        u = u + rng.uniform(-0.5, 2) * np.exp(-sum((x - ci) ** 2 for x, ci in zip(X, c)) / (2 * w * w))
    return GridFunction(g, u)


# symmetrization ---------------------------------------------------------------


def test_symmetrize_fixes_decreasing_radial():
    g = RadialGrid.uniform(3, 15.0, 1500)
    u = gaussian_radial(g, amp=2.0)
    q = C.symmetrize(u)
    assert q.monotone_flag
    assert np.max(np.abs(q.values - u.values)) <= 1e-9 * 2.0


def test_symmetrize_distribution_function_radial():
    g = RadialGrid.uniform(3, 12.0, 1200)
    u = two_bump_radial(g)
    q = C.symmetrize(u)
    assert is_radially_nonincreasing(q)
    w = g.weights
    for c in np.linspace(0.05, 1.4, 20):
        before = float(np.sum(w[u.values > c]))
        after = float(np.sum(w[q.values > c]))
        # one cell at the level-set radius of the rearranged profile
        j = min(int(np.sum(q.values > c)), g.size - 1)
        assert abs(before - after) <= w[j] * (1 + 1e-9)


def test_symmetrize_radial_equimeasurability_converges():
    errs = []
    for M in (1024, 2048, 4096):
        g = RadialGrid.uniform(3, 12.0, M)
        u = two_bump_radial(g)
        up, q = u.positive_part(), C.symmetrize(u)
        errs.append(abs(quad(q, lambda v: v**4) / quad(up, lambda v: v**4) - 1))
    # cell-level mismatch of a sorted step profile: second order in h
    assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3
    assert errs[2] < 1e-5


@pytest.mark.parametrize("dim,M", [(1, 512), (2, 64), (3, 16)])
def test_symmetrize_box_exactly_equimeasurable(dim, M, rng):
    g = BoxGrid.centered(dim, 6.0, M)
    for _ in range(5):
        u = random_box(g, rng)
        q = C.symmetrize(u)
        assert np.array_equal(np.sort(q.values, axis=None), np.sort(np.maximum(u.values, 0), axis=None))
        assert is_radially_nonincreasing(q)


def test_symmetrize_box_polya_szego(rng):
    g2 = BoxGrid.centered(2, 6.0, 64)
    g1 = BoxGrid.centered(1, 20.0, 1024)
    for _ in range(20):
        u = random_box(g2, rng)
        q = C.symmetrize(u)
        assert C.dirichlet_energy(q) <= C.dirichlet_energy(u) * (1 + 1e-6)
        for p in ((1.7, 1.7), (1.6, 1.9)):
            eu = C.anisotropic_energy(u, p, check=False)
            eq = C.anisotropic_energy(q, p, check=False)
            assert all(a <= b * (1 + 1e-6) for a, b in zip(eq, eu))
        v = random_box(g1, rng)
        w = C.symmetrize(v)
        for s in (0.2, 0.3, 0.4):
            assert C.fractional_seminorm(w, s, check=False) <= C.fractional_seminorm(v, s, check=False) * (1 + 1e-6)


def test_symmetrize_onto_radial_grid():
    src = RadialGrid.uniform(3, 10.0, 500)
    dst = RadialGrid.uniform(3, 10.0, 800)
    u = two_bump_radial(src)
    q = C.symmetrize(u, dst)
    assert q.grid is dst and is_radially_nonincreasing(q)
    assert quad(q) == pytest.approx(quad(u.positive_part()), rel=1e-12)
    with pytest.raises(ValueError):
        C.symmetrize(u, BoxGrid.centered(3, 10.0, 8))


# fractional seminorm ---------------------------------------------------------


def test_seminorm_s_zero_is_l2():
    g = BoxGrid.centered(1, 20.0, 1024)
    u = gaussian_box(g)
    assert abs(C.fractional_seminorm(u, 0.0) - quad(u, np.square)) < 1e-8


def test_seminorm_gaussian_half():
    # int |xi| e^{-xi^2} dxi = Gamma(1) = 1; the lattice sum misses the kink of
    # |xi| at 0 by O(dxi^2), so the box must be long
    g = BoxGrid.centered(1, 160.0, 16000)
    assert C.fractional_seminorm(gaussian_box(g), 0.5) == pytest.approx(1.0, rel=1e-4)


@pytest.mark.parametrize("s", [0.1, 0.25, 0.5, 0.75])
def test_seminorm_gaussian_gamma_rate(s):
    # error against Gamma(s + 1/2) decays like dxi^(1+2s) = (pi/R)^(1+2s)
    errs = []
    for R in (20.0, 40.0, 80.0):
        g = BoxGrid.centered(1, R, int(100 * R))
        errs.append(abs(C.fractional_seminorm(gaussian_box(g), s) / gamma(s + 0.5) - 1))
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(2 ** (1 + 2 * s), rel=0.02)


@pytest.mark.parametrize("t", [0.5, 2.0, 3.7])
def test_seminorm_dilation_law(t):
    g = BoxGrid.centered(1, 20.0, 2048)
    u = gaussian_box(g, width=0.8)
    for s in (0.2, 0.4):
        ratio = C.fractional_seminorm(scale(u, t), s) / C.fractional_seminorm(u, s)
        assert ratio == pytest.approx(t ** (1 - 2 * s), rel=1e-6)


def test_seminorm_radial_embedding():
    g = RadialGrid.uniform(2, 10.0, 256)
    u = gaussian_radial(g)
    # |xi|^1 against e^{-|xi|^2} in 2-D: 2 pi Gamma(3/2) / 2
    assert C.fractional_seminorm(u, 0.5) == pytest.approx(math.pi * gamma(1.5), rel=5e-3)


def test_seminorm_alias_guard(rng):
    g = BoxGrid.centered(1, 5.0, 256)
    with pytest.raises(GridTooCoarse):
        C.fractional_seminorm(GridFunction(g, rng.standard_normal(256)), 0.4)


def test_seminorm_monotone_in_s_for_high_frequency():
    g = BoxGrid.centered(1, 20.0, 4096)
    x = g.coords(0)
    u = GridFunction(g, np.exp(-x**2 / 2) * np.cos(6 * x))
    vals = [C.fractional_seminorm(u, s) for s in (0.1, 0.2, 0.3, 0.4)]
    assert np.all(np.diff(vals) > 0)
    v = gaussian_box(g, width=4.0)
    vals = [C.fractional_seminorm(v, s) for s in (0.1, 0.2, 0.3, 0.4)]
    assert np.all(np.diff(vals) < 0)


# gradient energies -------------------------------------------------------------


def test_anisotropic_gaussian_moment():
    g = BoxGrid.centered(2, 10.0, 2048)
    e = C.anisotropic_energy(gaussian_box(g), (2.0, 2.0))
    assert e[0] == pytest.approx(math.pi / 4, rel=2e-5)
    assert e[1] == pytest.approx(e[0], rel=1e-10)


def test_anisotropic_constant_is_zero():
    g = BoxGrid.centered(2, 4.0, 32)
    assert C.anisotropic_energy(GridFunction(g, np.full(g.shape, 3.0)), (1.6, 1.9)) == [0.0, 0.0]


def test_anisotropic_swap_symmetry(rng):
    g = BoxGrid.centered(2, 6.0, 64)
    u = random_box(g, rng).values
    u = GridFunction(g, u + u.T)
    a, b = C.anisotropic_energy(u, (1.7, 1.7))
    assert abs(a - b) <= 1e-10 * a


def test_anisotropic_scheme_guard():
    g = BoxGrid.centered(2, 4.0, 8)
    with pytest.raises(GridTooCoarse):
        C.anisotropic_energy(gaussian_box(g, width=0.4), (1.7, 1.7))


def test_dirichlet_gaussian_moment_1d():
    # 1/2 int x^2 e^{-x^2} dx over the line
    g = BoxGrid.centered(1, 12.0, 1 << 16)
    assert abs(C.dirichlet_energy(gaussian_box(g)) - math.sqrt(math.pi) / 4) < 1e-8


def test_dirichlet_constant_zero():
    g = RadialGrid.uniform(3, 5.0, 50)
    assert C.dirichlet_energy(GridFunction(g, np.ones(g.size))) == 0.0


@pytest.mark.parametrize("t", [0.5, 2.0, 3.7])
def test_dirichlet_dilation_law(t):
    g = RadialGrid.uniform(3, 10.0, 400)
    u = gaussian_radial(g)
    assert C.dirichlet_energy(scale(u, t)) == pytest.approx(t * C.dirichlet_energy(u), rel=1e-12)
    b = BoxGrid.centered(2, 8.0, 64)
    v = gaussian_box(b)
    assert C.dirichlet_energy(scale(v, t)) == pytest.approx(C.dirichlet_energy(v), rel=1e-12)


def _fd_check(energy, grad, u, rng, h=1e-6):
    # direction vanishing with u: |d|^p with p < 2 has unbounded curvature at d = 0
    v = rng.standard_normal(u.grid.shape) * u.values
    fd = (energy(u.with_values(u.values + h * v)) - energy(u.with_values(u.values - h * v))) / (2 * h)
    an = float(np.sum(grad(u) * v))
    return abs(fd - an) / max(abs(an), 1e-12)


def test_gradients_match_finite_differences(rng):
    g1 = BoxGrid.centered(1, 10.0, 256)
    u1 = gaussian_box(g1)
    for s in (0.2, 0.4):
        assert _fd_check(lambda u: 0.5 * C.fractional_seminorm(u, s, check=False),
                         lambda u: C.fractional_gradient(u, s), u1, rng) < 1e-6
    g2 = BoxGrid.centered(2, 5.0, 32)
    u2 = gaussian_box(g2)
    for i, p in enumerate((1.6, 1.9)):
        assert _fd_check(lambda u: C.anisotropic_energy(u, (1.6, 1.9), check=False)[i],
                         lambda u: C.anisotropic_gradient(u, i, p), u2, rng) < 1e-6
    gr = RadialGrid.uniform(3, 8.0, 200)
    assert _fd_check(C.dirichlet_energy, C.dirichlet_gradient, gaussian_radial(gr), rng) < 1e-6
