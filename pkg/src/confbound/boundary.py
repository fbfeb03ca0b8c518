"""Boundary geometry on the faces ``x0 = lo`` / ``x0 = hi`` of a chart.

The general hypersurface formulas are used throughout, so the same code
serves collar (Fermi-gauge) charts and conformally rescaled metrics that are
no longer in Fermi gauge.  Index ``0`` denotes the unit normal.

Orientation: ``n`` is the outward unit normal, and
``L(X, Y) = <nabla_X n, Y> = -n_mu Gamma^mu_XY``, so a round sphere bounding a
flat ball has ``L = h`` and ``H = 3``.  For a collar ``dr^2 + h(x, r)`` with
``r`` increasing inward this reads ``L = -h_r / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .curvature import Curvature, covariant_derivative, weyl_norm_sq
from .errors import DegenerateBoundaryMetric
from .metric import MetricField, check_positive, metric_jet

# Sign of the normal used for the derivative terms of S (and for nabla^0 in the
# totally geodesic identities) relative to the outward normal.  Pinned by the
# conformal transformation law of S; see tests/test_boundary.py.
S_NORMAL_SIGN = -1


@dataclass(frozen=True)
class CollarChart:
    """Collar ``g = dr^2 + h_ij(x, r) dx^i dx^j`` with boundary at ``r = 0``.

    ``h`` maps coordinates ``[r, x1, x2, x3]`` to a 3x3 nested list (upper
    triangle read).  ``r_max`` is the extent of the chart in ``r`` (the whole
    model for catalog charts); ``depth`` is the collar depth used for doubling.
    ``faces`` lists which of ``r = 0`` ("lo") and ``r = r_max`` ("hi") are boundary.
    """

    name: str
    h: Callable[[Sequence], Sequence[Sequence]] = field(compare=False)
    boundary_lo: tuple[float, float, float]
    boundary_hi: tuple[float, float, float]
    r_max: float
    euler_char: int
    depth: float = 0.2
    faces: tuple[str, ...] = ("lo",)
    ignorable: tuple[int, ...] = ()
    coords: tuple[str, ...] = ("r", "x1", "x2", "x3")

    def metric_field(self) -> MetricField:
        h = self.h

        def components(xs):
            hh = h(xs)
            return [
                [1.0, 0.0, 0.0, 0.0],
                [None, hh[0][0], hh[0][1], hh[0][2]],
                [None, None, hh[1][1], hh[1][2]],
                [None, None, None, hh[2][2]],
            ]

        return MetricField(
            self.name,
            self.coords,
            (0.0,) + tuple(self.boundary_lo),
            (float(self.r_max),) + tuple(self.boundary_hi),
            components,
            self.ignorable,
        )

    def reflected(self) -> "CollarChart":
        """The same chart seen from the ``r = r_max`` face (``r -> r_max - r``)."""
        h, rm = self.h, self.r_max

        def h2(xs):
            return h([rm - xs[0]] + list(xs[1:]))

        faces = tuple({"lo": "hi", "hi": "lo"}[f] for f in self.faces)
        return CollarChart(self.name + "~", h2, self.boundary_lo, self.boundary_hi, rm, self.euler_char, self.depth, faces, self.ignorable, self.coords)

    def boundary_ignorable(self) -> tuple[int, ...]:
        return tuple(i - 1 for i in self.ignorable if i > 0)


def face_value(field: MetricField, face: str) -> float:
    return field.lo[0] if face == "lo" else field.hi[0]


def face_points(field: MetricField, face: str, xb: np.ndarray) -> np.ndarray:
    xb = np.atleast_2d(np.asarray(xb, dtype=float))
    return np.column_stack([np.full(len(xb), face_value(field, face)), xb])


class FaceGeometry:
    """Extrinsic and ambient data at boundary points ``xb`` (shape (N, 3))."""

    def __init__(self, field: MetricField, face: str, xb: np.ndarray, order: int = 2):
        self.field = field
        self.face = face
        self.xb = np.atleast_2d(np.asarray(xb, dtype=float))
        self.points = face_points(field, face, self.xb)
        self.order = order
        self.sign = -1.0 if face == "lo" else 1.0
        g = metric_jet(field, self.points, order, check=False)
        h0 = g.value[1:, 1:]
        dets = np.linalg.det(np.moveaxis(h0, -1, 0))
        if np.any(dets <= 0):
            k = int(np.argmin(dets))
            raise DegenerateBoundaryMetric(f"boundary metric singular at {tuple(self.points[k])}")
        check_positive(g.value, self.points)
        self.curv = Curvature(g)

    # -- normal ------------------------------------------------------------
    @cached_property
    def n_up_jet(self) -> J.Jet:
        ginv = self.curv.ginv
        inv_len = J.power(ginv[0, 0], -0.5)
        return J.mul(ginv[:, 0], inv_len[None]) * self.sign

    @cached_property
    def n_low_jet(self) -> J.Jet:
        ginv = self.curv.ginv
        inv_len = J.power(ginv[0, 0], -0.5)
        e0 = np.zeros((self.field.dim, 1))
        e0[0] = 1.0
        return J.mul(J.Jet.constant(e0, inv_len.n, inv_len.order), inv_len[None]) * self.sign

    @property
    def n_up(self) -> np.ndarray:
        return self.n_up_jet.value

    # -- intrinsic/extrinsic -------------------------------------------------
    @cached_property
    def h(self) -> np.ndarray:
        return self.curv.g.value[1:, 1:]

    @cached_property
    def hinv(self) -> np.ndarray:
        return np.moveaxis(np.linalg.inv(np.moveaxis(self.h, -1, 0)), 0, -1)

    @cached_property
    def sqrt_det_h(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(np.moveaxis(self.h, -1, 0)))

    @cached_property
    def L_jet(self) -> J.Jet:
        """L_ij on the tangential block as a jet of order K - 1."""
        G = self.curv.Gamma
        full = J.contract("m,mij->ij", self.n_low_jet, G) * -1.0
        return full[1:, 1:]

    @cached_property
    def L(self) -> np.ndarray:
        return self.L_jet.value

    @cached_property
    def L_mixed(self) -> np.ndarray:
        return np.einsum("ik...,kj...->ij...", self.hinv, self.L)

    @cached_property
    def H(self) -> np.ndarray:
        return np.einsum("ii...->...", self.L_mixed)

    @cached_property
    def L_up(self) -> np.ndarray:
        return np.einsum("ia...,jb...,ab...->ij...", self.hinv, self.hinv, self.L)

    @cached_property
    def L_norm_sq(self) -> np.ndarray:
        return np.einsum("ij...,ji...->...", self.L_mixed, self.L_mixed)

    @cached_property
    def tr_L3(self) -> np.ndarray:
        return np.einsum("ij...,jk...,ki...->...", self.L_mixed, self.L_mixed, self.L_mixed)

    @cached_property
    def umbilic_defect(self) -> np.ndarray:
        """max |L_ij - (H/3) h_ij| per point."""
        return np.max(np.abs(self.L - self.H / 3.0 * self.h), axis=(0, 1))

    # -- ambient curvature projected -----------------------------------------
    def _nn(self, T: np.ndarray) -> np.ndarray:
        """T(n, ., n, .) restricted to tangential slots."""
        n = self.n_up
        return np.einsum("aibj...,a...,b...->ij...", T, n, n)[1:, 1:]

    @cached_property
    def R00(self) -> np.ndarray:
        n = self.n_up
        return np.einsum("ab...,a...,b...->...", self.curv.Ric.value, n, n)

    @cached_property
    def B_integrand(self) -> np.ndarray:
        """The boundary Chern-Gauss-Bonnet integrand."""
        Rm = self.curv.Riem.value[1:, 1:, 1:, 1:]
        RkikjL = np.einsum("kl...,kilj...,ij...->...", self.hinv, Rm, self.L_up)
        H = self.H
        R = self.curv.R.value
        return 0.5 * R * H - self.R00 * H - RkikjL + H**3 / 3.0 - H * self.L_norm_sq + 2.0 / 3.0 * self.tr_L3

    @cached_property
    def W0i0j(self) -> np.ndarray:
        return self._nn(self.curv.W.value)

    @cached_property
    def W_i0j0_L(self) -> np.ndarray:
        """W_{i0j0} L^{ij} (even in the normal, equal to W_{0i0j} L^{ij})."""
        return np.einsum("ij...,ij...->...", self.W0i0j, self.L_up)

    def S_parts(self, normal_sign: int = S_NORMAL_SIGN):
        """Summands of S: (div term, its transpose, -nabla^0 W_0i0j, (4/3) H W_0i0j)."""
        if self.order < 3:
            raise ValueError("S needs metric jets of order >= 3")
        nu = normal_sign * self.n_up
        dW = self.curv.dW.value  # [a,b,c,d,e] = nabla_e W_abcd
        ginv = self.curv.ginv.value
        divW = np.einsum("abcde...,ae...->bcd...", dW, ginv)
        t1 = np.einsum("icj...,c...->ij...", divW, nu)[1:, 1:]
        t3 = np.einsum("aicje...,a...,c...,e...->ij...", dW, nu, nu, nu)[1:, 1:]
        t4 = 4.0 / 3.0 * self.H * self.W0i0j
        return t1, np.swapaxes(t1, 0, 1), -t3, t4

    @cached_property
    def S(self) -> np.ndarray:
        return sum(self.S_parts())

    @cached_property
    def weyl_norm_sq(self) -> np.ndarray:
        return weyl_norm_sq(self.curv.W.value, self.curv.ginv.value)


# -- intrinsic boundary curvature (n = 3) ---------------------------------------
def boundary_field(field: MetricField, face: str) -> MetricField:
    """Induced metric on the face as a 3-dimensional field."""
    c = face_value(field, face)
    comps = field.components

    def components(xs):
        x0 = J.Jet.constant(np.full(xs[0].shape, c), xs[0].n, xs[0].order) if isinstance(xs[0], J.Jet) else np.full(np.shape(xs[0]), c)
        g = comps([x0] + list(xs))
        return [[g[a][b] if a <= b else None for b in range(1, 4)] for a in range(1, 4)]

    ign = tuple(i - 1 for i in field.ignorable if i > 0)
    return MetricField(field.name + ":face", field.coords[1:], field.lo[1:], field.hi[1:], components, ign)


@dataclass(frozen=True)
class BoundaryGeometry:
    L: np.ndarray
    H: np.ndarray
    umbilicDefect: np.ndarray
    S: np.ndarray
    Bintegrand: np.ndarray
    h0: np.ndarray


def boundary_geometry(field: MetricField, xb: np.ndarray, face: str = "lo") -> BoundaryGeometry:
    fg = FaceGeometry(field, face, xb, order=3)
    return BoundaryGeometry(fg.L, fg.H, fg.umbilic_defect, fg.S, fg.B_integrand, fg.h)


def gauss_codazzi_residual(field: MetricField, xb: np.ndarray, face: str = "lo") -> tuple[np.ndarray, np.ndarray]:
    """Residual tensors of the Gauss and Codazzi equations (batch last)."""
    fg = FaceGeometry(field, face, xb, order=2)
    bf = boundary_field(field, face)
    cs = Curvature(metric_jet(bf, fg.xb, order=2))
    Rs = cs.Riem.value
    L = fg.L
    Rm = fg.curv.Riem.value
    gauss = Rm[1:, 1:, 1:, 1:] - (
        Rs - np.einsum("ij...,kl...->ikjl...", L, L) + np.einsum("il...,jk...->ikjl...", L, L)
    )
    # tangential derivatives of L from the 4-variable jet
    Lj = fg.L_jet
    dL = np.stack([Lj.deriv(mu).value for mu in range(1, 4)], axis=2)  # [i, k, m] = d_m L_ik
    Gs = cs.Gamma.value
    nablaL = dL - np.einsum("pmi...,pk...->ikm...", Gs, L) - np.einsum("pmk...,ip...->ikm...", Gs, L)
    n = fg.n_up
    Rijk0 = np.einsum("ijka...,a...->ijk...", Rm, n)[1:, 1:, 1:]
    # R_ijk0 = -nabla_j L_ik + nabla_i L_jk (outward normal)
    codazzi = Rijk0 - (-np.einsum("ikj...->ijk...", nablaL) + np.einsum("jki...->ijk...", nablaL))
    return gauss, codazzi


# -- collar expansion ------------------------------------------------------------
@dataclass(frozen=True)
class ExpansionCoefficients:
    """h = sum_k r^k h^(k) / k!; ``direct`` from Taylor data, ``curvature`` from the formulas."""

    direct: tuple[np.ndarray, ...]
    curvature: tuple[np.ndarray, ...]
    L: np.ndarray

    @property
    def residual(self) -> float:
        return float(max(np.max(np.abs(a - b)) for a, b in zip(self.direct[1:], self.curvature[1:])))

    @property
    def sign_coherence(self) -> float:
        return float(np.max(np.abs(self.direct[1] + 2 * self.L)))


def expansion_coefficients(chart: CollarChart, xb: np.ndarray) -> ExpansionCoefficients:
    """Both routes to h^(0..4) at boundary points of a collar chart (face r = 0).

    In the curvature formulas the index 0 is d_r, the inward unit normal of
    the collar; normal derivatives are taken along it.
    """
    field = chart.metric_field()
    pts = face_points(field, "lo", xb)
    g = metric_jet(field, pts, order=4)
    direct = [g.value[1:, 1:]]
    for k in range(1, 5):
        direct.append(g.partial((k, 0, 0, 0))[1:, 1:])
    curv = Curvature(g)
    h0 = direct[0]
    hinv = np.moveaxis(np.linalg.inv(np.moveaxis(h0, -1, 0)), 0, -1)
    L = -0.5 * direct[1]
    Lm = np.einsum("ik...,kj...->ij...", hinv, L)  # L^i_j
    Rm = curv.Riem.value
    dR = curv.dRiem.value  # [a,b,c,d,e] = nabla_e R_abcd
    ddR = covariant_derivative(curv.dRiem, curv.Gamma).value  # [..., e1, e2]
    R0i0j = Rm[0, 1:, 0, 1:]
    dR0 = dR[0, 1:, 0, 1:, 0]
    ddR0 = ddR[0, 1:, 0, 1:, 0, 0]
    LL = np.einsum("ik...,kj...->ij...", L, Lm)
    c1 = -2 * L
    c2 = -2 * R0i0j + 2 * LL
    # L^k_i R_{j0k0} = L^k_i R_{0j0k}
    LR = np.einsum("ki...,jk...->ij...", Lm, R0i0j)
    c3 = -2 * dR0 + 4 * LR + 4 * np.swapaxes(LR, 0, 1)
    dRL = np.einsum("ik...,kj...->ij...", dR0, Lm)  # nabla_0 R_0i0k L^k_j
    RLL = np.einsum("ik...,kl...,lj...->ij...", R0i0j, Lm, Lm)
    RR = np.einsum("ik...,kl...,lj...->ij...", R0i0j, hinv, R0i0j)
    c4 = -2 * ddR0 + 6 * dRL + 6 * np.swapaxes(dRL, 0, 1) - 4 * RLL - 4 * np.swapaxes(RLL, 0, 1) + 8 * RR
    return ExpansionCoefficients(tuple(direct), (h0, c1, c2, c3, c4), L)


def _tensor_norm(T: np.ndarray, hinv: np.ndarray) -> np.ndarray:
    return np.sqrt(np.abs(np.einsum("ij...,ia...,jb...,ab...->...", T, hinv, hinv, T)))


def geodesic_boundary_identities(chart: CollarChart, xb: np.ndarray, tol: float = 1e-8) -> dict:
    """Residuals of the totally geodesic boundary identities (sup over ``xb``)."""
    field = chart.metric_field()
    fg = FaceGeometry(field, "lo", xb, order=3)
    curv = fg.curv
    nu = S_NORMAL_SIGN * fg.n_up  # normal used by nabla^0
    g = curv.g.value
    Ric = curv.Ric.value
    P = curv.P.value
    W = curv.W.value
    n = fg.n_up
    dP = curv.dP.value
    dW = curv.dW.value
    dRm = curv.dRiem.value
    # nabla^0 T = nu^e nabla_e T with the remaining 0 slots filled by the outward n (even count)
    nablaP_ij = np.einsum("ije...,e...->ij...", dP, nu)[1:, 1:]
    nablaP_00 = np.einsum("abe...,a...,b...,e...->...", dP, n, n, nu)
    nablaW = np.einsum("aibje...,a...,b...,e...->ij...", dW, n, n, nu)[1:, 1:]
    nablaR = np.einsum("aibje...,a...,b...,e...->ij...", dRm, n, n, nu)[1:, 1:]
    S = fg.S
    h0 = fg.h
    res = {
        "R_j0": float(np.max(np.abs(np.einsum("ja...,a...->j...", Ric, n)[1:]))),
        "P_j0": float(np.max(np.abs(np.einsum("ja...,a...->j...", P, n)[1:]))),
        "W_ki0j": float(np.max(np.abs(np.einsum("kiaj...,a...->kij...", W, n)[1:, 1:, 1:]))),
        "S_minus_nablaP": float(np.max(np.abs(S - nablaP_ij))),
        "S_minus_nablaW": float(np.max(np.abs(S - nablaW))),
        "nablaR_minus_2S_gP00": float(np.max(np.abs(nablaR - 2 * S - h0 * nablaP_00))),
    }
    dr_h = np.max(np.abs(fg.L))
    res["totallyGeodesic"] = bool(dr_h < tol)
    res["NotTotallyGeodesic"] = not res["totallyGeodesic"]
    del g
    return res


def h3_vs_S(chart: CollarChart, xb: np.ndarray, tol_L: float = 1e-8, tol_R: float = 1e-6) -> dict:
    """Residual of h''' + 4 S plus validity flags (the identity assumes both flags)."""
    ex = expansion_coefficients(chart, xb)
    field = chart.metric_field()
    fg = FaceGeometry(field, "lo", xb, order=3)
    h3 = ex.direct[3]
    S = fg.S
    R = fg.curv.R.value
    flags = {
        "totallyGeodesic": bool(np.max(np.abs(fg.L)) < tol_L),
        "constantScalarCurvature": bool(np.ptp(R) < tol_R),
    }
    flags["valid"] = flags["totallyGeodesic"] and flags["constantScalarCurvature"]
    return {"residual": float(np.max(np.abs(h3 + 4 * S))), **flags}


# -- doubling --------------------------------------------------------------------
@dataclass(frozen=True)
class DoublingReport:
    jumps: tuple[float, float, float, float]

    @property
    def smoothness(self) -> str:
        for k, j in enumerate(self.jumps, start=1):
            if j > 1e-9:
                return f"C^{k - 1}"
        return "C^4"


def double(chart: CollarChart, xb: np.ndarray) -> tuple[MetricField, DoublingReport]:
    """Doubled metric ``dr^2 + h(x, |r|)`` on ``(-depth, depth)`` and its jump report.

    Jump(k) is the sup over ``xb`` of the h0-norm of the jump of the Taylor
    coefficient ``d_r^k h / k!`` across ``r = 0``.
    """
    from .expr import fn_abs

    h = chart.h

    def hd(xs):
        return h([fn_abs(xs[0])] + list(xs[1:]))

    def hm(xs):
        return h([-xs[0]] + list(xs[1:]))

    dbl = CollarChart(chart.name + "-double", hd, chart.boundary_lo, chart.boundary_hi, chart.depth, chart.euler_char, chart.depth, (), chart.ignorable)
    dfield = dbl.metric_field()
    dfield = MetricField(dfield.name, dfield.coords, (-chart.depth,) + dfield.lo[1:], (chart.depth,) + dfield.hi[1:], dfield.components, dfield.ignorable)

    plus = chart.metric_field()
    minus = CollarChart(chart.name + "-", hm, chart.boundary_lo, chart.boundary_hi, chart.depth, chart.euler_char).metric_field()
    pts = face_points(plus, "lo", xb)
    gp = metric_jet(plus, pts, order=4)
    gm = metric_jet(minus, pts, order=4)
    h0 = gp.value[1:, 1:]
    hinv = np.moveaxis(np.linalg.inv(np.moveaxis(h0, -1, 0)), 0, -1)
    mon = J.monomials(4)
    jumps = []
    for k in range(1, 5):
        i = mon.index[(k, 0, 0, 0)]
        # coefficients of h(x, -r), i.e. of the doubled metric on the r < 0 side
        cp = gp.c[i][1:, 1:]
        cm = gm.c[i][1:, 1:]
        jumps.append(float(np.max(_tensor_norm(cp - cm, hinv))))
    return dfield, DoublingReport(tuple(jumps))
