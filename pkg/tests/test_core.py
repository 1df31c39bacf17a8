import math

import numpy as np
import pytest

from pohozaev.core import (
    DilationAction,
    FunctionalFamily,
    Tolerances,
    check_exponents,
    eval_K,
    fiber,
    fiber_root,
    make_state,
    onmanifold_energy,
    pohozaev_identity_check,
    project_to_pohozaev,
    scale,
)
from pohozaev.errors import BracketNotFound, NonadmissibleExponents, NonFiniteValue, NotOnManifold, PhiNonpositive
from pohozaev.grids import BoxGrid, GridFunction, quad
from pohozaev.nonlinearity import power
from pohozaev.problems import FractionalSum, GridSpec, ProblemInstance, build_family

from conftest import gaussian_box

ACT = DilationAction()


def _mass(u):
    return quad(u, np.square)


def homogeneous_family(u0, lambdas, lambda_phi):
    """psi_i = (m/m0)^(lambda_i/2), Phi = (m/m0)^(lambda_Phi/2) with m = int u^2 on a 2-D box.

    Exactly homogeneous under dilation, and every functional equals 1 at u0.
    """
    m0 = _mass(u0)
    psi = tuple((lambda u, a=a: (_mass(u) / m0) ** (a / 2)) for a in lambdas)
    return FunctionalFamily(psi, lambda u: (_mass(u) / m0) ** (lambda_phi / 2), lambdas, lambda_phi)


@pytest.fixture
def u0():
    return gaussian_box(BoxGrid.centered(2, 6.0, 32))


def test_eval_K_arithmetic(u0):
    fam = FunctionalFamily((lambda u: 1.0,), lambda u: 1.0, (1.0,), 2.0)
    assert eval_K(fam, u0) == -1.0


def test_eval_K_zero_function(u0):
    fam = homogeneous_family(u0, (1.0,), 2.0)
    assert eval_K(fam, GridFunction(u0.grid, np.zeros(u0.grid.shape))) == 0.0


def test_eval_K_nonfinite(u0):
    fam = FunctionalFamily((lambda u: math.inf,), lambda u: 1.0, (1.0,), 2.0)
    with pytest.raises(NonFiniteValue):
        eval_K(fam, u0)


def test_exponent_check():
    check_exponents((0.5, 1.0), 2.0)
    with pytest.raises(NonadmissibleExponents):
        check_exponents((0.0,), 1.0)
    with pytest.raises(NonadmissibleExponents):
        check_exponents((1.0, 2.0), 2.0)
    with pytest.raises(NonadmissibleExponents):
        FunctionalFamily((lambda u: 1.0,), lambda u: 1.0, (3.0,), 2.0)


def test_fiber_single_term(u0):
    fam = homogeneous_family(u0, (1.0,), 2.0)
    fp = fiber(fam, ACT, u0, np.linspace(0.01, 3, 300))
    assert fp.t_star == pytest.approx(0.5, rel=1e-12)
    assert fp.h_star == pytest.approx(0.25, rel=1e-12)
    assert np.allclose(fp.h_values, fp.t_samples - fp.t_samples**2)
    assert fp.tail_negative
    assert np.all(fp.h_star >= fp.h_values)


def test_fiber_two_term(u0):
    fam = homogeneous_family(u0, (1.0, 2.0), 3.0)
    fp = fiber(fam, ACT, u0, np.geomspace(0.1, 10, 100))
    assert fp.t_star == pytest.approx(1.0, rel=1e-12)
    assert fp.h_star == pytest.approx(1.0, rel=1e-12)


def test_fiber_requires_positive_phi(u0):
    fam = FunctionalFamily((lambda u: 1.0,), lambda u: -1.0, (1.0,), 2.0)
    with pytest.raises(PhiNonpositive):
        fiber(fam, ACT, u0, [1.0, 2.0])


def test_fiber_dense_scan_fractional():
    inst = ProblemInstance(FractionalSum((0.25,), 1), power(2.0), GridSpec("box", 20.0, 2048))
    fam = build_family(inst)
    u = gaussian_box(inst.build_grid())
    u = u.with_values(3.0 * u.values)
    t = np.geomspace(1e-2, 1e2, 10_000)
    fp = fiber(fam, ACT, u, t)
    t_scan = t[np.argmax(fp.h_values)]
    assert abs(t_scan - fp.t_star) / fp.t_star < 5e-4
    assert np.all(fp.h_star >= fp.h_values)
    vals = fam.evaluate(ACT(fp.t_star, u))
    assert fp.k_residual <= Tolerances().tol_K * vals.K_scale


def test_projection_closed_form(u0):
    fam = homogeneous_family(u0, (1.0,), 2.0)
    t, st = project_to_pohozaev(fam, u0)
    assert t == pytest.approx(0.5, rel=1e-12)
    assert st.on_manifold and st.nonnegative
    assert abs(st.K_value) <= 1e-10


@pytest.mark.parametrize("lam,lam_phi,psi,phi", [(0.3, 1.0, 2.0, 0.7), (1.5, 4.0, 0.2, 5.0)])
def test_root_matches_closed_form(lam, lam_phi, psi, phi):
    t = fiber_root([psi], phi, [lam], lam_phi)
    assert t == pytest.approx((lam * psi / (lam_phi * phi)) ** (1 / (lam_phi - lam)), rel=1e-12)


def test_root_groups_tied_exponents():
    t = fiber_root([1.0, 3.0], 2.0, [1.0, 1.0], 2.0)
    assert t == pytest.approx(1.0, rel=1e-12)


def test_root_bracket_failure():
    with pytest.raises(BracketNotFound):
        fiber_root([1e-300], 1.0, [1.0], 2.0)


def test_projection_idempotent_fractional():
    inst = ProblemInstance(FractionalSum((0.2, 0.4), 1), power(2.0), GridSpec("box", 20.0, 2048))
    fam = build_family(inst)
    u = gaussian_box(inst.build_grid(), width=0.7)
    u = u.with_values(4.0 * u.values)
    t, st = project_to_pohozaev(fam, u)
    t2, _ = project_to_pohozaev(fam, st.u)
    assert abs(t2 - 1.0) < 1e-10


def test_identity_check_single_term(u0):
    fam = homogeneous_family(u0, (1.0,), 2.0)
    _, st = project_to_pohozaev(fam, u0)
    assert st.I_value == pytest.approx(0.25, rel=1e-12)
    assert onmanifold_energy(st.values) == pytest.approx(0.25, rel=1e-12)
    assert pohozaev_identity_check(fam, st) <= 1e-12


def test_identity_check_off_manifold(u0):
    fam = homogeneous_family(u0, (1.0,), 2.0)
    t, st = project_to_pohozaev(fam, u0)
    off = make_state(fam, scale(ACT, u0, 1.3 * t))
    assert not off.on_manifold
    with pytest.raises(NotOnManifold):
        pohozaev_identity_check(fam, off)


def test_sign_of_K_changes_once():
    inst = ProblemInstance(FractionalSum((0.3, 0.3), 1), power(2.0), GridSpec("box", 20.0, 1024))
    fam = build_family(inst)
    u = gaussian_box(inst.build_grid())
    u = u.with_values(3.0 * u.values)
    fp = fiber(fam, ACT, u, np.geomspace(1e-3, 1e3, 1000))
    s = np.sign(fp.k_values)
    assert np.count_nonzero(np.diff(s)) == 1


def test_fractional_power_laws():
    inst = ProblemInstance(FractionalSum((0.25,), 1), power(2.0), GridSpec("box", 20.0, 2048))
    fam = build_family(inst)
    u = gaussian_box(inst.build_grid())
    u = u.with_values(3.0 * u.values)
    a, b = fam.evaluate(u), fam.evaluate(ACT(2.0, u))
    assert b.psi[0] / a.psi[0] == pytest.approx(math.sqrt(2), rel=1e-9)
    assert b.phi / a.phi == pytest.approx(2.0, rel=1e-12)
