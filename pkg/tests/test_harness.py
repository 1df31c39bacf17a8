import json

import numpy as np
import pytest

from pohozaev.core import DilationAction
from pohozaev.harness import HARD, SURROGATES, MixtureSampler, check_family, check_instance, with_exponents
from pohozaev.nonlinearity import cubic, power
from pohozaev.problems import Anisotropic, FractionalSum, GridSpec, ProblemInstance, build_family

FRAC = ProblemInstance(FractionalSum((0.2, 0.4), 1), power(2.0), GridSpec("box", 20.0, 1024))
ANISO = ProblemInstance(Anisotropic((1.7, 1.7), 2), cubic(), GridSpec("box", 10.0, 64))


@pytest.fixture(scope="module")
def frac_report():
    return check_instance(FRAC, seed=3, n=40, n_small=60)


def test_report_lists_every_check(frac_report):
    assert tuple(e.name for e in frac_report.entries) == HARD + SURROGATES
    assert all(frac_report.entry(n).surrogate for n in SURROGATES)
    assert not any(frac_report.entry(n).surrogate for n in HARD)


def test_fractional_family_passes(frac_report):
    assert frac_report.passed, frac_report.to_text()
    for e in frac_report.entries:
        assert e.margin == pytest.approx(e.threshold - e.worst)


def test_anisotropic_family_passes():
    rep = check_instance(ANISO, seed=1, n=30, n_small=40)
    assert rep.passed, rep.to_text()


def test_report_reproducible(frac_report):
    again = check_instance(FRAC, seed=3, n=40, n_small=60)
    assert again.to_json() == frac_report.to_json()
    other = check_instance(FRAC, seed=4, n=40, n_small=60)
    assert other.to_json() != frac_report.to_json()


def test_permuted_exponents_fail_with_witness():
    fam = build_family(FRAC)
    bad = with_exponents(fam, lambdas=fam.lambdas[::-1])
    rep = check_family(bad, FRAC.build_grid(), seed=0, n=20, n_small=20)
    assert not rep.passed
    x1 = rep.entry("X1")
    assert not x1.passed
    assert x1.witness is not None
    # the witness replays to the same sample through the sampler
    sampler = MixtureSampler(FRAC.build_grid())
    u = sampler.build(x1.witness["params"])
    vt = bad.evaluate(DilationAction()(x1.witness["t"], u))
    assert vt.psi[x1.witness["psi_index"]] == pytest.approx(x1.witness["observed"], rel=1e-12)
    assert "X1" in rep.to_text() and "FAIL" in rep.to_text()


def test_wrong_phi_exponent_fails():
    fam = build_family(FRAC)
    bad = with_exponents(fam, lambda_phi=2.0)
    rep = check_family(bad, FRAC.build_grid(), seed=0, n=20, n_small=20)
    assert rep.entry("X1").passed
    assert not rep.entry("X2").passed


def test_json_is_plain(frac_report):
    data = json.loads(frac_report.to_json())
    assert data["passed"] is True
    assert {e["name"] for e in data["entries"]} == set(HARD + SURROGATES)


def test_sampler_signed_components():
    sampler = MixtureSampler(FRAC.build_grid(), components=(3, 3), negative_prob=1.0)
    u, params = sampler.draw(np.random.default_rng(0))
    amps = [c["amplitude"] for c in params["components"]]
    assert amps[0] > 0 and all(a < 0 for a in amps[1:])
    assert np.allclose(sampler.build(params).values, u.values)
