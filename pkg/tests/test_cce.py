import math

import numpy as np
import pytest

from confbound import cce as C
from confbound import fmath as m
from confbound.boundary import boundary_field
from confbound.curvature import Curvature
from confbound.errors import NotConformallyCompact
from confbound.metric import MetricField, metric_jet
from confbound.models import CCData, DEFAULT_EPS_GRID, Model
from confbound.quadrature import QuadratureRule
from conftest import model

V_H4 = 4 * math.pi**2 / 3


@pytest.fixture(scope="module")
def hyp():
    return model("hyperbolic-ball")


@pytest.fixture(scope="module")
def bump():
    return model("hyperbolic-bump(0.1,0)")


@pytest.fixture(scope="module")
def consistency(hyp):
    return C.cce_consistency_report(hyp, QuadratureRule(24))


def _half_space():
    flat = MetricField(
        "flat", ("x0", "x1", "x2", "x3"), (0, 0, 0, 0), (1, 1, 1, 1),
        lambda xs: [[1.0, 0.0, 0.0, 0.0], [None, 1.0, 0.0, 0.0], [None, None, 1.0, 0.0], [None, None, None, 1.0]],
        (1, 2, 3),
    )
    return Model("half-space", "conformally-compact", flat, 1, ("lo",), cc=CCData(flat, lambda xs: xs[0], False, DEFAULT_EPS_GRID))


# -- compactification checks ----------------------------------------------------
def test_hyperbolic_rho_extends(hyp):
    rep = C.rho_normalization(hyp)
    assert rep["continuity"] < 1e-3
    assert rep["faceNormalization"] < 1e-6
    # the registered geodesic defining function passes the eikonal check
    geo = C.rho_normalization(hyp, rho=hyp.cc.geodesic_r)
    assert geo["geodesicResidual"] < 1e-6


def test_flat_half_space_rejected():
    with pytest.raises(NotConformallyCompact):
        C.rho_normalization(_half_space())


def test_generic_rho_flagged_non_geodesic(hyp):
    rep = C.geodesic_defining_function(hyp, rho=lambda xs: 2 * xs[0] - xs[0] ** 2).as_dict()
    assert rep["rhoGeodesicResidual"] > 1e-3
    assert not rep["rhoIsGeodesic"]
    # the solve itself is unaffected by the override
    assert rep["normalizationResidual"] < 1e-6


def test_einstein_residual(hyp, bump):
    assert C.einstein_residual(hyp) < 1e-6
    assert C.einstein_residual(bump) > 1e-3


# -- geodesic defining function -------------------------------------------------
@pytest.mark.parametrize("name", ["hyperbolic-ball", "hyperbolic-bump(0.1,0)"])
def test_geodesic_ode_normalization(name):
    rep = C.geodesic_defining_function(model(name))
    assert rep.r[-1] >= 0.1 - 1e-12
    assert rep.normalization < 1e-6
    assert rep.hamiltonian < 1e-6
    assert rep.orthogonality < 1e-6
    assert rep.analyticDiff is not None and rep.analyticDiff < 1e-6


# -- Fefferman-Graham coefficients ----------------------------------------------
@pytest.mark.parametrize("method", ["analytic", "numeric"])
def test_fg_hyperbolic(hyp, method):
    fg = C.fg_coefficients(hyp, method=method)
    assert fg.method == method
    assert np.max(np.abs(fg.g2 + 0.5 * fg.h)) < 1e-4
    assert np.max(np.abs(fg.g3)) < 1e-6
    assert fg.r1 < 1e-6
    assert fg.traceG3 < 1e-6


def test_fg_boundary_metric_is_round(hyp):
    fg = C.fg_coefficients(hyp, method="analytic")
    # face of the compactified ball: unit S^3 in polar chart (theta1, theta2, phi)
    t1, t2 = fg.xb[:, 0], fg.xb[:, 1]
    expect = np.zeros_like(fg.h)
    expect[0, 0] = 1.0
    expect[1, 1] = np.sin(t1) ** 2
    expect[2, 2] = (np.sin(t1) * np.sin(t2)) ** 2
    assert np.max(np.abs(fg.h - expect)) < 1e-8


def test_fg_rescaled_boundary_still_has_no_g3(hyp):
    om = lambda xs: 0.2 * m.cos(xs[1]) + 0.1 * m.sin(xs[1]) * m.cos(xs[2])  # noqa: E731
    fg = C.fg_coefficients(hyp, omega=om)
    assert fg.method == "numeric"
    assert np.max(np.abs(fg.g3)) < 1e-6
    assert fg.r1 < 1e-6


def test_fg_rescaled_matches_closed_form(hyp):
    # for hyperbolic space the geodesic collar of e^{2w} h is h - r^2 P + r^4/4 P h^-1 P
    om = lambda xs: 0.2 * m.cos(xs[1]) + 0.1 * m.sin(xs[1]) * m.cos(xs[2])  # noqa: E731
    xb, _ = C.boundary_grid(hyp, 4)
    bf = boundary_field(hyp.field, "lo")

    def comps(ys):
        g = bf.components(ys)
        e = m.exp(2 * om([0 * ys[0]] + list(ys)))
        return [[g[a][b] * e if a <= b else None for b in range(3)] for a in range(3)]

    hf = MetricField("ht", bf.coords, bf.lo, bf.hi, comps)
    c = Curvature(metric_jet(hf, xb, 2))
    P, h, hi = c.P.value, c.g.value, c.ginv.value
    PP = np.einsum("ia...,ab...,bj...->ij...", P, hi, P)
    rs = np.array([0.025, 0.05, 0.1])
    rep = C.geodesic_defining_function(hyp, om, rs, xb)
    for k, r in enumerate(rs):
        assert np.max(np.abs(rep.collar[k] - (h - r * r * P + r**4 / 4 * PP))) < 1e-6


def test_fg_non_einstein_runs_and_gates(bump):
    fg = C.fg_coefficients(bump)
    assert np.all(np.isfinite(fg.g3))
    assert fg.r1 < 1e-6
    rep = C.cce_consistency_report(bump, QuadratureRule(16))
    assert rep["isEinstein"] is False
    assert rep["anderson"] is None and rep["EvsV"] is None and rep["SvsG3"] is None
    assert rep["weylRouteDiff"] < 1e-6 * max(1.0, rep["weylEnergy"])
    assert rep["weylEnergy"] > 0


def test_fg_unknown_method(hyp):
    with pytest.raises(ValueError):
        C.fg_coefficients(hyp, method="spline")


# -- renormalized volume --------------------------------------------------------
def test_renormalized_volume_value(hyp):
    vol = C.renormalized_volume(hyp)
    assert abs(vol.V - V_H4) / V_H4 < 1e-3
    assert abs(vol.diagEps2) < 1e-3
    # leading coefficients of the ball: c0 = 2 pi^2 / 3, c2 = -3 pi^2 / 2
    assert abs(vol.c0 / (2 * math.pi**2 / 3) - 1) < 1e-6
    assert abs(vol.c2 / (-1.5 * math.pi**2) - 1) < 1e-3


def test_renormalized_volume_window_independence(hyp):
    v1 = C.renormalized_volume(hyp).V
    v2 = C.renormalized_volume(hyp, C.default_window(hyp)).V
    assert set(C.default_window(hyp)).isdisjoint(hyp.cc.eps_grid)
    assert abs(v1 - v2) < 1e-4 * abs(v1)


def test_renormalized_volume_doubled_grid(hyp):
    base = C.renormalized_volume(hyp)
    doubled = C.renormalized_volume(hyp, tuple(2 * e for e in hyp.cc.eps_grid))
    assert abs(base.V - doubled.V) < max(1e-4 * abs(base.V), 10 * base.fitResidual)


def test_renormalized_volume_routes_agree(hyp):
    a = C.renormalized_volume(hyp, method="collar").V
    b = C.renormalized_volume(hyp, method="chart").V
    assert abs(a - b) < 1e-4 * abs(a)


def test_renormalized_volume_quadrature_order(hyp):
    a = C.renormalized_volume(hyp, rule=QuadratureRule(16)).V
    b = C.renormalized_volume(hyp, rule=QuadratureRule(24)).V
    assert abs(a - b) < 1e-4 * abs(b)


@pytest.mark.parametrize(
    "grid",
    [
        (1e-4, 5e-5, 2.5e-5),  # too few points
        (1e-4, 2e-4, 5e-5, 2e-5),  # not decreasing
        (1e-4, 1e-4, 5e-5, 2e-5),  # repeated
        (5.0, 1e-1, 1e-2, 1e-3),  # beyond the collar
    ],
)
def test_bad_eps_grid(hyp, grid):
    with pytest.raises(ValueError):
        C.renormalized_volume(hyp, grid)


def test_not_cc_model_rejected():
    with pytest.raises(NotConformallyCompact):
        C.renormalized_volume(model("flat-ball"))


# -- consistency report ---------------------------------------------------------
def test_consistency_anchors(consistency):
    rep = consistency
    assert rep["isEinstein"] is True
    assert abs(rep["V"] - V_H4) / V_H4 < 1e-3
    assert rep["weylEnergy"] < 1e-10
    assert rep["anderson"] < 1e-3
    assert rep["EvsV"] < 1e-3
    assert abs(rep["Einv"] - 2 * math.pi**2) / (2 * math.pi**2) < 1e-6
    assert rep["supG2PlusHalfH"] < 1e-4
    assert rep["supG3"] < 1e-6
    assert rep["supS"] < 1e-6
    assert rep["SvsG3"] < 1e-6
    assert rep["r1Coefficient"] < 1e-6


def test_consistency_deterministic(hyp, consistency):
    again = C.cce_consistency_report(hyp, QuadratureRule(24))
    assert again == consistency
