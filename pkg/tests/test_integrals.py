import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confbound.conformal import random_factor, rescale_model
from confbound.errors import NodeEvaluationError
from confbound.invariants import (
    EIGHT_PI2,
    HEMISPHERE_CONCLUSION,
    hypothesis_report,
    integrate_boundary,
    integrate_bulk,
    invariants_report,
    total_energy,
)
from confbound.metric import from_expressions
from confbound.quadrature import QuadratureRule, integrate

from conftest import model, report

PI2 = math.pi**2
SMOOTH = ["flat-ball", "hemisphere", "cap(1)", "round-s4", "s2xs2", "hyperbolic-ball", "bump(0.01,0)", "even-collar(0)", "cylinder-collar", "hyperbolic-bump(0.1,0)"]


# -- quadrature rule -----------------------------------------------------------------
@pytest.mark.parametrize("order", [2, 5, 8, 24])
def test_monomial_exactness_1d(order):
    rule = QuadratureRule(order)
    x, w = rule.nodes_1d(-0.3, 1.7)
    assert np.all(w > 0)
    for k in range(2 * order):
        exact = (1.7 ** (k + 1) - (-0.3) ** (k + 1)) / (k + 1)
        assert float(np.sum(w * x**k)) == pytest.approx(exact, rel=1e-13, abs=1e-13)


def test_not_exact_past_degree():
    x, w = QuadratureRule(3).nodes_1d(0, 1)
    assert abs(float(np.sum(w * x**6)) - 1 / 7) > 1e-6


@given(st.tuples(*[st.integers(0, 7)] * 4))
@settings(max_examples=40)
def test_monomial_exactness_4d(k):
    pts, w = QuadratureRule(4).grid((0, 0, 0, 0), (1, 2, 1, 3))
    val = float(np.sum(w * np.prod(pts ** np.array(k), axis=1)))
    exact = np.prod([b ** (p + 1) / (p + 1) for b, p in zip((1, 2, 1, 3), k)])
    assert val == pytest.approx(exact, rel=1e-12)


def test_ignorable_axis_single_node():
    pts, w = QuadratureRule(6).grid((0, 0), (1, 2 * math.pi), ignorable=(1,))
    assert len(w) == 6
    assert float(np.sum(w)) == pytest.approx(2 * math.pi)


def test_order_validation():
    with pytest.raises(ValueError):
        QuadratureRule(1)


def test_node_error_reports_location():
    pts, w = QuadratureRule(3).grid((0,), (1,))
    with pytest.raises(NodeEvaluationError) as exc:
        integrate(pts, w, lambda p: np.where(p[:, 0] > 0.5, np.nan, 1.0))
    assert exc.value.coordinate[0] > 0.5


# -- integrate_bulk / integrate_boundary -----------------------------------------------
def test_bulk_unit_box():
    one = [["1", "0", "0", "0"], [None, "1", "0", "0"], [None, None, "1", "0"], [None, None, None, "1"]]
    f = from_expressions("box", ("x0", "x1", "x2", "x3"), (0,) * 4, (1,) * 4, one)
    assert integrate_bulk(f, lambda b: 1.0) == pytest.approx(1.0, rel=1e-15)


def test_bulk_sphere_volume():
    assert integrate_bulk(model("round-s4").field, lambda b: 1.0) == pytest.approx(8 * PI2 / 3, rel=1e-6)


def test_bulk_sigma2_hemisphere():
    assert integrate_bulk(model("hemisphere").field, lambda b: b.sigma2P) == pytest.approx(2 * PI2, rel=1e-6)


def test_boundary_area_and_B():
    assert integrate_boundary(model("hemisphere"), lambda f: 1.0) == pytest.approx(2 * PI2, rel=1e-12)
    assert integrate_boundary(model("flat-ball"), lambda f: f.B_integrand) == pytest.approx(4 * PI2, rel=1e-12)
    assert abs(integrate_boundary(model("hemisphere"), lambda f: f.H)) < 1e-12


def test_boundary_integral_of_closed_model_is_zero():
    assert integrate_boundary(model("s2xs2"), lambda f: 1.0) == 0.0


# -- invariant report -----------------------------------------------------------------
def test_hemisphere_report():
    r = report("hemisphere")
    assert r.weylEnergy < 1e-12
    assert r.Einv == pytest.approx(2 * PI2, rel=1e-10)
    assert abs(r.betaB) < 1e-12
    assert abs(r.cgbResidual) / EIGHT_PI2 < 1e-12
    assert r.Fb == pytest.approx(8 * math.sqrt(3) * math.pi, rel=1e-10)
    assert r.volume == pytest.approx(4 * PI2 / 3, rel=1e-12)
    assert r.boundaryArea == pytest.approx(2 * PI2, rel=1e-12)


def test_flat_ball_report():
    r = report("flat-ball")
    assert r.weylEnergy < 1e-12
    assert r.sigma2Integral == pytest.approx(0, abs=1e-12)
    assert r.boundaryB == pytest.approx(4 * PI2, rel=1e-12)
    assert r.Einv == pytest.approx(2 * PI2, rel=1e-12)
    assert r.Fb == pytest.approx(12 * math.sqrt(2) * math.pi, rel=1e-10)


def test_s2xs2_report():
    r = report("s2xs2")
    assert r.weylEnergy == pytest.approx(64 * PI2 / 3, rel=1e-10)
    assert r.sigma2Integral == pytest.approx(8 * PI2 / 3, rel=1e-10)
    assert r.betaB == pytest.approx(8, rel=1e-10)
    assert r.chi == 4


@pytest.mark.parametrize("name", SMOOTH)
def test_assembly_identities(name):
    r = report(name)
    assert r.Einv == r.sigma2Integral + 0.5 * r.boundaryB
    assert r.cgbResidual == EIGHT_PI2 * r.chi - r.weylEnergy - 4 * r.Einv


@pytest.mark.parametrize("name", SMOOTH)
def test_cgb_every_catalog_model(name):
    assert abs(report(name).cgbResidual) / EIGHT_PI2 < 1e-5


def test_beta_undefined_without_positive_energy():
    r = report("cylinder-collar")
    assert abs(r.Einv) < 1e-12
    assert r.betaB is None and not r.beta_defined


def test_total_energy_matches_report():
    assert total_energy(model("flat-ball"), QuadratureRule(24)) == pytest.approx(report("flat-ball").Fb, rel=1e-14)


@pytest.mark.parametrize("name", SMOOTH)
def test_quadrature_convergence(name):
    res = [abs(report(name, k).cgbResidual) for k in (8, 16, 32)]
    assert res[1] <= res[0] + 1e-12
    assert res[2] <= res[1] + 1e-12


def test_hemisphere_extremality_under_rescaling():
    m = model("hemisphere")
    for seed in range(20):
        r = invariants_report(rescale_model(m, random_factor(m, seed)))
        assert r.Einv == pytest.approx(2 * PI2, rel=1e-5), seed
        assert abs(r.cgbResidual) / EIGHT_PI2 < 1e-5


# -- hypothesis report -----------------------------------------------------------------
@pytest.mark.parametrize("name", ["hemisphere", "flat-ball"])
def test_rigidity_conclusion_listed(name):
    rep = hypothesis_report(model(name), report=report(name))
    assert rep["hypothesesSatisfied"]["rigidityBeta4"]
    assert any(c.startswith("rigidityBeta4:") and HEMISPHERE_CONCLUSION in c for c in rep["conclusions"])
    assert rep["predicates"]["yamabeSurrogateLabel"] == "necessary-condition surrogate"


def test_bump_lists_no_conclusion():
    rep = hypothesis_report(model("bump(0.05,0)"), report=report("bump(0.05,0)"))
    assert not rep["predicates"]["bachFlat"]
    assert rep["supBach"] > 1e-6
    assert rep["conclusions"] == []


def test_s2xs2_beta_threshold_and_closed():
    rep = hypothesis_report(model("s2xs2"), report=report("s2xs2"))
    assert not rep["predicates"]["betaBelow8"]
    assert not rep["boundaryTheoremsApplicable"]
    assert rep["conclusions"] == []


def test_user_eps_enters_thresholds():
    r = report("s2xs2")
    rep = hypothesis_report(model("s2xs2"), report=r, eps2=0.01)
    assert rep["predicates"]["betaBelow8eps2"]
    assert rep["userEps"]["eps2"] == 0.01


def test_hypothesis_report_deterministic():
    a = hypothesis_report(model("flat-ball"), report=report("flat-ball"))
    b = hypothesis_report(model("flat-ball"), report=report("flat-ball"))
    assert a == b
