import math

import numpy as np
import pytest

from confbound.conformal import (
    OptimizerConfig,
    conformal_factor,
    invariance_residuals,
    radial_basis,
    random_factor,
    rescale,
    rescale_model,
    scalar_law_residual,
    yamabe_estimate,
)
from confbound.metric import metric_values

from conftest import model

TARGET = 8 * math.sqrt(3) * math.pi


def test_factor_from_expression_tracks_dependence():
    w = conformal_factor("0.1*cos(r) + x1", ("r", "x1", "x2", "x3"))
    assert set(w.independent) == {2, 3}
    assert w.source == "0.1 * cos(r) + x1"


def test_factor_from_number_and_callable():
    c = conformal_factor(0.5, ("r", "x1", "x2", "x3"))
    assert float(c([np.array(0.2)] * 4)) == 0.5
    f = conformal_factor(lambda xs: xs[0] ** 2, ("r", "x1", "x2", "x3"), independent=(3,))
    assert f.independent == (3,)


def test_rescale_multiplies_metric():
    m = model("flat-ball")
    f = rescale(m.field, "0.3*(1 - r)^2")
    p = np.array([[0.4, 1.0, 1.3, 0.2]])
    assert np.allclose(metric_values(f, p), math.exp(2 * 0.3 * 0.36) * metric_values(m.field, p), rtol=1e-15)
    assert 3 in f.ignorable


def test_rescale_drops_ignorable_axis_when_w_depends_on_it():
    m = model("flat-ball")
    assert 3 not in rescale(m.field, "0.1*sin(x3)").ignorable


def test_random_factor_is_deterministic():
    m = model("hemisphere")
    p = [np.array([0.3]), np.array([1.1]), np.array([0.7]), np.array([0.0])]
    assert np.array_equal(random_factor(m, 4)(p), random_factor(m, 4)(p))
    assert not np.array_equal(random_factor(m, 4)(p), random_factor(m, 5)(p))


@pytest.mark.parametrize("name", ["hemisphere", "flat-ball", "bump(0.05,1)", "s2xs2"])
def test_scalar_curvature_law(name):
    m = model(name)
    w = random_factor(m, 2)
    assert scalar_law_residual(m.field, w, m.field.interior_points(16, 1)) < 1e-9


@pytest.mark.parametrize("name,seed", [("hemisphere", 0), ("flat-ball", 1), ("bump(0.05,1)", 2), ("s2xs2", 3)])
def test_invariance_residuals(name, seed):
    m = model(name)
    res = invariance_residuals(m, random_factor(m, seed), seed=seed)
    assert res["Wb"] < 1e-5 * max(1.0, abs(res["WbValue"]))
    assert res["E"] < 1e-5 * max(1.0, abs(res["EValue"]))
    assert res["bachLaw"] < 1e-6
    assert res["SLaw"] < 1e-6


def test_S_law_with_normal_derivative_of_w():
    m = model("bump(0.05,2)")
    w = conformal_factor("0.3*r - 0.2*r^2 + 0.1*r*cos(x1)*(1-r)", m.field.coords)
    res = invariance_residuals(m, w)
    assert res["SLaw"] < 1e-6
    assert res["bachLaw"] < 1e-6


def test_non_smooth_factor_breaks_invariance():
    # cos(x1) is not smooth at the centre of the ball, so E is not preserved
    m = model("flat-ball")
    res = invariance_residuals(m, "0.1*cos(x1)")
    assert res["E"] > 1e-3


def test_rescaled_model_keeps_metadata():
    m = model("hemisphere")
    mw = rescale_model(m, random_factor(m, 0))
    assert mw.chi == m.chi and mw.faces == m.faces and mw.collar is None


# -- Yamabe-type estimator -------------------------------------------------------------
def test_yamabe_hemisphere():
    m = model("hemisphere")
    est = yamabe_estimate(m, radial_basis(m, 2))
    assert est.value == pytest.approx(TARGET, rel=1e-4)
    assert est.value <= est.start + 1e-12


def test_yamabe_flat_ball_reaches_round_value():
    m = model("flat-ball")
    est = yamabe_estimate(m, radial_basis(m, 4), recompute=True)
    assert est.start == pytest.approx(12 * math.sqrt(2) * math.pi, rel=1e-10)
    assert abs(est.value / TARGET - 1) < 1e-3
    assert est.recomputed == pytest.approx(est.value, rel=1e-10)


def test_yamabe_empty_basis_returns_start():
    m = model("flat-ball")
    est = yamabe_estimate(m, [])
    assert est.value == est.start and est.iterations == 0


def test_yamabe_never_worse_than_start():
    m = model("bump(0.05,0)")
    est = yamabe_estimate(m, radial_basis(m, 2), OptimizerConfig(max_iter=5))
    assert est.value <= est.start


def test_yamabe_deterministic():
    m = model("flat-ball")
    a = yamabe_estimate(m, radial_basis(m, 2)).as_dict()
    b = yamabe_estimate(m, radial_basis(m, 2)).as_dict()
    assert a == b


def test_stereographic_factor_gives_round_curvature():
    m = model("flat-ball")
    f = rescale(m.field, "log(2/(1 + (1 - r)^2))")
    from confbound.curvature import curvature_bundle

    b = curvature_bundle(f, m.field.interior_points(20, 3))
    assert np.allclose(b.R, 12, atol=1e-10)
    assert np.max(np.abs(b.W)) < 1e-10


def test_zero_factor_is_identity():
    m = model("hemisphere")
    p = m.field.interior_points(5, 0)
    assert np.array_equal(metric_values(rescale(m.field, "0"), p), metric_values(m.field, p))


def test_homothety():
    m = model("flat-ball")
    res = invariance_residuals(m, 0.4)
    assert res["Wb"] < 1e-14
    assert res["E"] < 1e-8


def test_hemisphere_argmin_is_round_metric():
    m = model("hemisphere")
    basis = radial_basis(m, 2)
    est = yamabe_estimate(m, basis)
    # w = sum c_p sin(r)^p, so |dw| <= sum p |c_p| on the hemisphere
    assert sum(p * abs(c) for p, c in enumerate(est.coefficients, start=1)) < 1e-3
