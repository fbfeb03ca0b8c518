import math

import numpy as np
import pytest

from confbound.boundary import (
    CollarChart,
    FaceGeometry,
    boundary_geometry,
    double,
    expansion_coefficients,
    gauss_codazzi_residual,
    geodesic_boundary_identities,
    h3_vs_S,
)
from confbound.errors import DegenerateBoundaryMetric
from confbound.invariants import boundary_sample
from confbound.models import S3_HI, S3_LO, _coef, _sym_form, perturbed_collar

from conftest import model

COLLARS = ["flat-ball", "hemisphere", "cap(1)", "cap(2.2)", "bump(0.01,0)", "bump(0.05,3)", "even-collar(0)", "even-collar(3)", "cylinder-collar", "hyperbolic-ball", "hyperbolic-bump(0.1,0)"]


def face(name, order=3):
    m = model(name)
    return FaceGeometry(m.field, "lo", boundary_sample(m), order=order)


def s3(xb):
    c, t = xb[:, 0], xb[:, 1]
    z = np.zeros_like(c)
    a = np.sin(c) ** 2
    return np.array([[1 + z, z, z], [z, a, z], [z, z, a * np.sin(t) ** 2]])


def flat_half_space():
    one = lambda xs: 1.0 + 0.0 * xs[0]  # noqa: E731
    zero = lambda xs: 0.0 * xs[0]  # noqa: E731
    return CollarChart("half-space", lambda xs: [[one(xs), zero(xs), zero(xs)], [None, one(xs), zero(xs)], [None, None, one(xs)]], (0, 0, 0), (1, 1, 1), 1.0, 1)


def cubic_collar(eps=0.1, seed=0):
    """Totally geodesic (h1 = 0) but with an r^3 term: the double is C^2 and not C^3."""
    coef = _coef(seed, 5)

    def pert(r, c, t):
        k = _sym_form(coef, c, t)
        s = eps * r**3
        return [[s * k[0][0], s * k[0][1]], [None, s * k[1][1]]]

    return perturbed_collar("cubic", lambda r: 1.0 + r**2, pert, 0.5, 1)


# -- boundary geometry anchors ---------------------------------------------------
def test_flat_ball_boundary():
    fg = face("flat-ball")
    assert np.allclose(fg.L, fg.h, atol=1e-13)
    assert np.allclose(fg.h, s3(fg.xb), atol=1e-13)
    assert np.allclose(fg.H, 3, atol=1e-13)
    assert np.allclose(fg.L_norm_sq, 3, atol=1e-12)
    assert np.allclose(fg.tr_L3, 3, atol=1e-12)
    assert np.allclose(fg.B_integrand, 2, atol=1e-12)


def test_hemisphere_boundary():
    fg = face("hemisphere")
    for arr in (fg.L, fg.H, fg.B_integrand, fg.S):
        assert np.max(np.abs(arr)) < 1e-12


@pytest.mark.parametrize("theta0", [0.6, 1.0, 2.2])
def test_cap_is_umbilic_with_known_mean_curvature(theta0):
    fg = face(f"cap({theta0:g})")
    assert np.max(fg.umbilic_defect) < 1e-12
    assert np.allclose(fg.H, 3 / math.tan(theta0), atol=1e-12)


def test_boundary_geometry_record():
    m = model("flat-ball")
    bg = boundary_geometry(m.field, boundary_sample(m))
    assert np.allclose(bg.H, 3, atol=1e-13)


@pytest.mark.parametrize("name", COLLARS)
def test_S_symmetric_trace_free(name):
    fg = face(name)
    S = fg.S
    assert np.max(np.abs(S - np.swapaxes(S, 0, 1))) < 1e-8
    assert np.max(np.abs(np.einsum("ij...,ij...->...", fg.hinv, S))) < 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_totally_geodesic_implies_B_zero(seed):
    fg = face(f"even-collar({seed})")
    assert np.max(np.abs(fg.L)) < 1e-12
    assert np.max(np.abs(fg.B_integrand)) < 1e-10


def _B_with(fg, L):
    """Boundary integrand assembled with a substituted second fundamental form."""
    hinv = fg.hinv
    Lm = np.einsum("ik...,kj...->ij...", hinv, L)
    Lup = np.einsum("ik...,jl...,kl...->ij...", hinv, hinv, L)
    H = np.einsum("ii...->...", Lm)
    LL = np.einsum("ij...,ji...->...", Lm, Lm)
    L3 = np.einsum("ij...,jk...,ki...->...", Lm, Lm, Lm)
    Rm = fg.curv.Riem.value[1:, 1:, 1:, 1:]
    RL = np.einsum("kl...,kilj...,ij...->...", hinv, Rm, Lup)
    return 0.5 * fg.curv.R.value * H - fg.R00 * H - RL + H**3 / 3 - H * LL + 2 / 3 * L3


@pytest.mark.parametrize("name", ["flat-ball", "cap(1)", "cap(2.2)", "hyperbolic-ball"])
def test_umbilic_B_simplification(name):
    fg = face(name)
    assert np.max(np.abs(_B_with(fg, fg.L) - fg.B_integrand)) < 1e-12
    assert np.max(np.abs(_B_with(fg, fg.H / 3 * fg.h) - fg.B_integrand)) < 1e-9


def test_degenerate_boundary_metric():
    ch = CollarChart("bad", lambda xs: [[xs[1], 0.0 * xs[0], 0.0 * xs[0]], [None, 1 + 0.0 * xs[0], 0.0 * xs[0]], [None, None, 1 + 0.0 * xs[0]]], (0, 0, 0), (1, 1, 1), 1.0, 1)
    with pytest.raises(DegenerateBoundaryMetric):
        FaceGeometry(ch.metric_field(), "lo", np.array([[0.0, 0.5, 0.5]]))


# -- Gauss and Codazzi -----------------------------------------------------------
@pytest.mark.parametrize("name", COLLARS)
def test_gauss_codazzi(name):
    m = model(name)
    gauss, codazzi = gauss_codazzi_residual(m.field, boundary_sample(m))
    assert np.max(np.abs(gauss)) < 1e-7
    assert np.max(np.abs(codazzi)) < 1e-7


def test_gauss_flat_ball_tight():
    m = model("flat-ball")
    gauss, codazzi = gauss_codazzi_residual(m.field, boundary_sample(m))
    assert np.max(np.abs(gauss)) < 1e-9


# -- collar expansion ---------------------------------------------------------------
def _pattern(name, expected):
    m = model(name)
    xb = boundary_sample(m)
    ex = expansion_coefficients(m.collar, xb)
    g = s3(xb)
    for k, lam in enumerate(expected, start=1):
        assert np.max(np.abs(ex.direct[k] - lam * g)) < 1e-10
        assert np.max(np.abs(ex.curvature[k] - lam * g)) < 1e-6
    assert ex.residual < 1e-6


def test_hemisphere_expansion_pattern():
    _pattern("hemisphere", [0, -2, 0, 8])


def test_flat_ball_expansion_pattern():
    _pattern("flat-ball", [-2, 2, 0, 0])


def test_flat_half_space_expansion():
    ex = expansion_coefficients(flat_half_space(), np.array([[0.2, 0.3, 0.4], [0.5, 0.5, 0.5]]))
    for k in range(1, 5):
        assert np.max(np.abs(ex.direct[k])) == 0
        assert np.max(np.abs(ex.curvature[k])) < 1e-14


@pytest.mark.parametrize("name", ["bump(0.05,1)", "even-collar(2)", "cap(1)", "hyperbolic-bump(0.1,0)"])
def test_expansion_routes_agree_generic(name):
    m = model(name)
    assert expansion_coefficients(m.collar, boundary_sample(m)).residual < 1e-6


def test_expansion_cubic_collar():
    ch = cubic_collar()
    assert expansion_coefficients(ch, np.array([[0.7, 1.1, 0.0], [1.9, 2.0, 0.0]])).residual < 1e-6


@pytest.mark.parametrize("name", COLLARS)
def test_sign_coherence(name):
    m = model(name)
    assert expansion_coefficients(m.collar, boundary_sample(m)).sign_coherence < 1e-9


# -- totally geodesic identities ---------------------------------------------------
SIX = ("R_j0", "P_j0", "W_ki0j", "S_minus_nablaP", "S_minus_nablaW", "nablaR_minus_2S_gP00")


def test_geodesic_identities_hemisphere():
    m = model("hemisphere")
    res = geodesic_boundary_identities(m.collar, boundary_sample(m))
    assert res["totallyGeodesic"]
    assert all(res[k] < 1e-9 for k in SIX)


@pytest.mark.parametrize("seed", range(5))
def test_geodesic_identities_even_collar(seed):
    m = model(f"even-collar({seed})")
    res = geodesic_boundary_identities(m.collar, boundary_sample(m))
    assert res["totallyGeodesic"]
    assert all(res[k] < 1e-7 for k in SIX)


def test_geodesic_identities_cubic_collar_nonzero_S():
    ch = cubic_collar()
    xb = np.array([[0.7, 1.1, 0.0], [1.9, 2.0, 0.0], [1.2, 0.6, 0.0]])
    fg = FaceGeometry(ch.metric_field(), "lo", xb, order=3)
    assert np.max(np.abs(fg.S)) > 1e-2
    res = geodesic_boundary_identities(ch, xb)
    assert res["totallyGeodesic"]
    assert all(res[k] < 1e-7 for k in SIX)


def test_geodesic_identities_flat_ball_flagged():
    m = model("flat-ball")
    res = geodesic_boundary_identities(m.collar, boundary_sample(m))
    assert res["NotTotallyGeodesic"]


# -- h''' = -4 S -------------------------------------------------------------------
def test_h3_vs_S_hemisphere():
    m = model("hemisphere")
    res = h3_vs_S(m.collar, boundary_sample(m))
    assert res["valid"] and res["residual"] < 1e-12


def test_h3_vs_S_cylinder():
    m = model("cylinder-collar")
    xb = boundary_sample(m)
    res = h3_vs_S(m.collar, xb)
    assert res["valid"] and res["residual"] < 1e-12
    fg = FaceGeometry(m.field, "lo", xb, order=3)
    assert np.allclose(fg.curv.R.value, 6, atol=1e-12)
    assert np.max(np.abs(fg.S)) < 1e-12


def test_h3_vs_S_flat_ball_flags_invalid():
    m = model("flat-ball")
    res = h3_vs_S(m.collar, boundary_sample(m))
    assert not res["valid"] and not res["totallyGeodesic"]


def test_h3_vs_S_even_collar_flags_non_constant_R():
    m = model("even-collar(1)")
    res = h3_vs_S(m.collar, boundary_sample(m))
    assert res["totallyGeodesic"] and not res["constantScalarCurvature"] and not res["valid"]


# -- doubling ----------------------------------------------------------------------
def test_double_hemisphere_smooth():
    m = model("hemisphere")
    dfield, rep = double(m.collar, boundary_sample(m))
    assert max(rep.jumps) < 1e-9
    assert dfield.lo[0] == -m.collar.depth


def test_double_flat_ball_only_continuous():
    m = model("flat-ball")
    _, rep = double(m.collar, boundary_sample(m))
    # h1 = -2 g_S3 has h0-norm 2 sqrt(3); the jump of the first coefficient is twice that
    assert rep.jumps[0] == pytest.approx(4 * math.sqrt(3), rel=1e-12)
    assert rep.jumps[0] > 0.1
    assert rep.smoothness == "C^0"


@pytest.mark.parametrize("name", COLLARS)
def test_double_even_jumps_exactly_zero(name):
    m = model(name)
    _, rep = double(m.collar, boundary_sample(m))
    assert rep.jumps[1] == 0.0 and rep.jumps[3] == 0.0


def test_double_cubic_collar_c2_not_c3():
    ch = cubic_collar()
    _, rep = double(ch, np.array([[0.7, 1.1, 0.0], [1.9, 2.0, 0.0]]))
    assert rep.jumps[0] < 1e-12 and rep.jumps[1] == 0.0
    assert rep.jumps[2] > 1e-3
    assert rep.smoothness == "C^2"


def test_doubled_metric_is_reflection():
    m = model("flat-ball")
    dfield, _ = double(m.collar, boundary_sample(m))
    from confbound.metric import metric_values

    p = np.array([[0.1, 1.0, 1.2, 0.0], [-0.1, 1.0, 1.2, 0.0]])
    v = metric_values(dfield, p)
    assert np.allclose(v[..., 0], v[..., 1])
