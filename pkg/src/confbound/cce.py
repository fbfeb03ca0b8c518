"""Conformally compact models: geodesic defining functions, FG coefficients, renormalized volume."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy.integrate import solve_ivp

from . import jets as J
from .boundary import FaceGeometry
from .curvature import Curvature, weyl_norm_sq
from .errors import FitIllConditioned, NotConformallyCompact, ODEDivergence
from .invariants import invariants_report
from .metric import metric_jet, metric_values
from .models import Model
from .quadrature import QuadratureRule, integrate_many

FIT_EPS = 0.2
FIT_LEVELS = 7
FIT_DEGREE = 4
START_R = 1e-6
FD_STEP = 1e-3
MP_DPS = 50


def _require_cc(model: Model):
    if model.cc is None:
        raise NotConformallyCompact(f"model '{model.name}' carries no conformally compact data")
    return model.cc


def _as_jet(v, template: J.Jet) -> J.Jet:
    if isinstance(v, J.Jet):
        return v
    return J.Jet.constant(np.broadcast_to(np.asarray(v, dtype=float), template.shape), template.n, template.order)


def boundary_grid(model: Model, order: int = 4):
    """Gauss nodes on the face box; ignorable boundary axes get a single node."""
    f = model.field
    ign = tuple(i - 1 for i in f.ignorable if i > 0)
    return QuadratureRule(order).grid(f.lo[1:], f.hi[1:], ign)


# -- compactification checks ------------------------------------------------------
def rho_normalization(model: Model, rho=None, offsets=(1e-6, 1e-7), samples: int = 8, depths=(0.05, 0.1, 0.2)) -> dict:
    """Check ``rho^2 g_+`` near the face and whether ``|d rho|^2_{rho^2 g_+} = 1`` holds off it.

    Raises :class:`NotConformallyCompact` when ``rho^2 g_+`` fails to extend
    continuously (values at two tiny offsets disagree) or ``|d rho|`` does not
    tend to 1 at the face.
    """
    cc = _require_cc(model)
    rho = rho or cc.rho
    gp = cc.g_plus
    xb, _ = boundary_grid(model, 3)
    xb = xb[:samples]
    lo = gp.lo[0]

    def at(d):
        pts = np.column_stack([np.full(len(xb), lo + d), xb])
        xs = J.Jet.variables(pts, 1)
        rj = _as_jet(rho(xs), xs[0])
        g = metric_values(gp, pts)
        ginv = np.linalg.inv(np.moveaxis(g, -1, 0))
        dr = rj.grad().value.T
        r0 = rj.value
        norm = np.einsum("nab,na,nb->n", ginv, dr, dr) / r0**2
        return norm, g * r0**2

    (n1, c1), (n2, c2) = at(offsets[0]), at(offsets[1])
    cont = float(np.max(np.abs(c1 - c2)) / max(np.max(np.abs(c2)), 1e-300))
    face_norm = float(np.max(np.abs(n2 - 1)))
    if not np.isfinite(cont) or cont > 1e-3 or not np.isfinite(face_norm) or face_norm > 1e-3:
        raise NotConformallyCompact(
            f"rho^2 g_+ does not extend with |d rho| = 1 at the face (continuity {cont:.3g}, |d rho|^2 - 1 = {face_norm:.3g})"
        )
    inner = max(float(np.max(np.abs(at(d * (gp.hi[0] - lo))[0] - 1))) for d in depths)
    return {"continuity": cont, "faceNormalization": face_norm, "geodesicResidual": inner}


# -- characteristic system -----------------------------------------------------------
class _Characteristics:
    """Hamilton-Jacobi characteristics for ``r = rho e^v`` with ``|dr|_{r^2 g_+} = 1``.

    In the compactified metric ``gbar = rho^2 g_+`` the condition reads
    ``2<d rho, p> + rho |p|^2 = F`` with ``p = dv`` and ``F = (1 - |d rho|^2) / rho``.
    """

    def __init__(self, model: Model):
        cc = _require_cc(model)
        self.field = model.field
        self.rho = cc.rho

    def face_normal(self, z: np.ndarray) -> np.ndarray:
        """``gbar^-1 d rho`` scaled to unit pairing with ``d rho`` (``F`` is 0/0 on the face)."""
        xs = J.Jet.variables(z, 1)
        drho = _as_jet(self.rho(xs), xs[0]).grad().value.T
        ginv = np.linalg.inv(np.moveaxis(metric_values(self.field, z), -1, 0))
        u = np.einsum("nab,nb->na", ginv, drho)
        return u / np.einsum("na,na->n", u, drho)[:, None]

    def parts(self, z: np.ndarray, p: np.ndarray) -> dict:
        xs = J.Jet.variables(z, 2)
        rho2 = _as_jet(self.rho(xs), xs[0])
        g = metric_jet(self.field, z, order=1)
        ginv = J.inv(g)
        drho = rho2.grad()
        rho = rho2.truncate(1)
        gp = J.linear("ab,b->a", ginv, p.T)
        gd = J.contract("ab,b->a", ginv, drho)
        A = J.contract("a,a->", gp, drho)
        B = J.linear("a,a->", gp, p.T)
        C = J.contract("a,a->", gd, drho)
        F = (1.0 - C) / rho
        H = 2.0 * A + rho * B - F
        return {
            "dH": H.grad().value.T,
            "zdot": 2.0 * (gd.value + rho.value * gp.value).T,
            "F": F.value,
            "dF": F.grad().value.T,
            "rho": rho.value,
            "drho": drho.value.T,
            "B": B.value,
            "H": H.value,
            "ginv": np.moveaxis(ginv.value, -1, 0),
        }

    def rates(self, z, p, v):
        d = self.parts(z, p)
        zdot = d["zdot"]
        vdot = d["F"] + d["rho"] * d["B"]
        rdot = np.exp(v) * (np.einsum("na,na->n", d["drho"], zdot) + d["rho"] * vdot)
        return zdot, -d["dH"], vdot, rdot, d

    def start(self, zb: np.ndarray, omega, r0: float):
        """Initial data at common ``r = r0`` from face points ``zb`` and boundary factor ``omega``."""
        xs = J.Jet.variables(zb, 1)
        wj = _as_jet(omega(xs), xs[0]) if omega is not None else J.Jet.constant(np.zeros(len(zb)), zb.shape[1], 1)
        w0, dw = wj.value, wj.grad().value.T
        dw[:, 0] = 0.0
        u = self.face_normal(zb)
        delta = np.full(len(zb), r0)
        for _ in range(4):
            z0 = zb + delta[:, None] * u
            d = self.parts(z0, np.zeros_like(z0))
            pt = dw + 0.5 * delta[:, None] * d["dF"]
            pt[:, 0] = 0.0
            d = self.parts(z0, pt)
            gi = d["ginv"]
            a = d["rho"] * gi[:, 0, 0]
            b = 2 * np.einsum("na,na->n", gi[:, 0, :], d["drho"]) + 2 * d["rho"] * np.einsum("na,na->n", gi[:, 0, :], pt)
            c = d["H"]
            lam = -2 * c / (b + np.sqrt(b * b - 4 * a * c))
            p0 = pt.copy()
            p0[:, 0] += lam
            v0 = w0 + np.einsum("na,na->n", p0, z0 - zb)
            r_now = d["rho"] * np.exp(v0)
            delta = delta * r0 / r_now
        return z0, p0, v0

    def solve(self, zb: np.ndarray, omega, r_samples: np.ndarray, r0: float = START_R, hi: float | None = None):
        """Integrate all trajectories together with ``r`` as the independent variable."""
        n, dim = zb.shape
        z0, p0, v0 = self.start(zb, omega, r0)
        y0 = np.concatenate([z0.ravel(), p0.ravel(), v0])

        def rhs(r, y):
            z = y[: n * dim].reshape(n, dim)
            p = y[n * dim : 2 * n * dim].reshape(n, dim)
            v = y[2 * n * dim :]
            if not np.all(np.isfinite(y)) or (hi is not None and np.any(z[:, 0] > hi)):
                raise ODEDivergence(f"trajectory left the chart before r = {r:.3g}")
            zdot, pdot, vdot, rdot, _ = self.rates(z, p, v)
            if np.any(rdot <= 0):
                raise ODEDivergence(f"r stopped increasing along a trajectory at r = {r:.3g}")
            return np.concatenate([(zdot / rdot[:, None]).ravel(), (pdot / rdot[:, None]).ravel(), vdot / rdot])

        sol = solve_ivp(rhs, (r0, float(r_samples[-1])), y0, method="DOP853", t_eval=r_samples, rtol=1e-12, atol=1e-13)
        if sol.status != 0:
            raise ODEDivergence(sol.message)
        Y = sol.y.T
        z = Y[:, : n * dim].reshape(-1, n, dim)
        p = Y[:, n * dim : 2 * n * dim].reshape(-1, n, dim)
        v = Y[:, 2 * n * dim :]
        return z, p, v


@dataclass
class GeodesicReport:
    """Numeric geodesic defining function sampled along inward trajectories."""

    xb: np.ndarray
    r: np.ndarray
    z: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    collar: np.ndarray = field(repr=False)  # (len(r), 3, 3, N) induced metric of r^2 g_+ on level sets
    normalization: float
    orthogonality: float
    hamiltonian: float
    analyticDiff: float | None
    rho: dict

    @property
    def residual(self) -> float:
        return max(self.normalization, self.orthogonality, self.hamiltonian)

    def as_dict(self) -> dict:
        return {
            "depth": float(self.r[-1]),
            "normalizationResidual": self.normalization,
            "orthogonalityResidual": self.orthogonality,
            "hamiltonianResidual": self.hamiltonian,
            "analyticDiff": self.analyticDiff,
            "rhoIsGeodesic": self.rho["geodesicResidual"] < 1e-6,
            "rhoGeodesicResidual": self.rho["geodesicResidual"],
            "rhoFaceNormalization": self.rho["faceNormalization"],
            "samples": int(len(self.xb)),
        }


def geodesic_defining_function(
    model: Model,
    omega=None,
    r_samples=None,
    xb: np.ndarray | None = None,
    rho=None,
    fd_step: float = FD_STEP,
) -> GeodesicReport:
    """Solve for the geodesic defining function of ``e^{2 omega}`` times the face metric of ``rho^2 g_+``.

    ``omega`` maps chart coordinates (only face values matter) to a scalar.
    ``rho`` optionally replaces the model's defining function in the
    normalization check (the ODE always uses the model's compactification).
    Collar metrics on the level sets come from central differences across
    neighbouring trajectories, all integrated in one stacked solve so they share
    step sequences.
    """
    cc = _require_cc(model)
    rho_info = rho_normalization(model, rho)
    f = model.field
    if r_samples is None:
        r_samples = np.array([0.025, 0.05, 0.1])
    r_samples = np.sort(np.asarray(r_samples, dtype=float))
    if xb is None:
        xb, _ = boundary_grid(model, 4)
    xb = np.atleast_2d(xb)
    nb, d = xb.shape
    # five-point stencil per boundary axis: ODE round-off is amplified by 1/fd_step,
    # so a wide fourth-order stencil beats a narrow second-order one
    stencil = (2.0, 1.0, -1.0, -2.0)
    weights = np.array([-1.0, 8.0, -8.0, 1.0]) / 12.0
    offs = [np.zeros(d)]
    for i in range(d):
        for sgn in stencil:
            e = np.zeros(d)
            e[i] = sgn * fd_step
            offs.append(e)
    allx = np.concatenate([xb + o for o in offs])
    zb = np.column_stack([np.full(len(allx), f.lo[0]), allx])
    ch = _Characteristics(model)
    z, p, v = ch.solve(zb, omega, r_samples, hi=f.hi[0])
    R = len(r_samples)
    collar = np.zeros((R, d, d, nb))
    norm = orth = ham = 0.0
    for k in range(R):
        zk, vk = z[k], v[k]
        base = zk[:nb]
        g = np.moveaxis(metric_values(f, base), -1, 0)
        blocks = zk[nb:].reshape(d, len(stencil), nb, -1)
        tang = np.moveaxis(np.einsum("s,isna->ina", weights, blocks) / fd_step, 0, 1)
        e2v = np.exp(2 * vk[:nb])
        collar[k] = np.moveaxis(np.einsum("n,nab,nia,njb->nij", e2v, g, tang, tang), 0, -1)
        zdot, _, _, rdot, parts = ch.rates(base, p[k][:nb], vk[:nb])
        dz = zdot / rdot[:, None]
        norm = max(norm, float(np.max(np.abs(e2v * np.einsum("nab,na,nb->n", g, dz, dz) - 1))))
        orth = max(orth, float(np.max(np.abs(e2v[:, None] * np.einsum("nab,na,nib->ni", g, dz, tang)))))
        ham = max(ham, float(np.max(np.abs(parts["rho"] * parts["H"]))))
    analytic = None
    if cc.geodesic_r is not None and omega is None:
        diffs = []
        for k in range(R):
            base = z[k][:nb]
            ra = np.asarray(cc.geodesic_r([base[:, i] for i in range(base.shape[1])]), dtype=float)
            diffs.append(np.max(np.abs(ra - r_samples[k])))
        analytic = float(max(diffs))
    return GeodesicReport(xb, r_samples, z[:, :nb], v[:, :nb], collar, norm, orth, ham, analytic, rho_info)


# -- Fefferman-Graham coefficients ---------------------------------------------------
@dataclass
class FGExpansion:
    xb: np.ndarray
    h: np.ndarray  # (3, 3, N)
    g2: np.ndarray
    g3: np.ndarray
    r1: float
    fitResidual: float
    method: str
    traceG3: float
    volume: "RenormalizedVolume | None" = None

    def as_dict(self) -> dict:
        out = {
            "method": self.method,
            "r1Coefficient": self.r1,
            "fitResidual": self.fitResidual,
            "supG3": float(np.max(np.abs(self.g3))),
            "supG2PlusHalfH": float(np.max(np.abs(self.g2 + 0.5 * self.h))),
            "traceG3": self.traceG3,
        }
        if self.volume is not None:
            out.update(self.volume.as_dict())
        return out


def _fit(rs: np.ndarray, samples: np.ndarray, degree: int):
    """Least-squares polynomial fit along the first axis; returns coefficients and max residual."""
    scale = rs.max()
    V = np.vander(rs / scale, degree + 1, increasing=True)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > 1e12:
        raise FitIllConditioned(f"FG fit matrix condition {cond:.3g}")
    flat = samples.reshape(len(rs), -1)
    coef, *_ = np.linalg.lstsq(V, flat, rcond=None)
    resid = float(np.max(np.abs(V @ coef - flat))) if flat.size else 0.0
    coef = coef / scale ** np.arange(degree + 1)[:, None]
    return coef.reshape((degree + 1,) + samples.shape[1:]), resid


def fg_coefficients(
    model: Model,
    omega=None,
    eps: float = FIT_EPS,
    levels: int = FIT_LEVELS,
    degree: int = FIT_DEGREE,
    method: str = "auto",
    xb: np.ndarray | None = None,
) -> FGExpansion:
    """Taylor-fit ``r^2 g_+`` in geodesic normal form over ``r = eps 2^-k``, ``k < levels``.

    ``method`` is ``"analytic"`` (the registered geodesic collar), ``"numeric"``
    (characteristic ODE) or ``"auto"`` (analytic when available and ``omega`` is
    unset).
    """
    cc = _require_cc(model)
    if method == "auto":
        method = "analytic" if cc.geodesic_collar is not None and omega is None else "numeric"
    if xb is None:
        xb, _ = boundary_grid(model, 4)
    rs = eps * 2.0 ** -np.arange(levels)[::-1]
    if method == "analytic":
        if cc.geodesic_collar is None or omega is not None:
            raise ValueError("analytic FG path needs a registered geodesic collar and no boundary factor")
        fieldc = cc.geodesic_collar.metric_field()
        samples = np.stack([metric_values(fieldc, np.column_stack([np.full(len(xb), r), xb]))[1:, 1:] for r in rs])
    elif method == "numeric":
        samples = geodesic_defining_function(model, omega, rs, xb).collar
    else:
        raise ValueError(f"unknown FG method '{method}'")
    coef, resid = _fit(rs, samples, degree)
    hinv = np.moveaxis(np.linalg.inv(np.moveaxis(coef[0], -1, 0)), 0, -1)
    tr3 = float(np.max(np.abs(np.einsum("ij...,ij...->...", hinv, coef[3]))))
    return FGExpansion(xb, coef[0], coef[2], coef[3], float(np.max(np.abs(coef[1]))), resid, method, tr3)


# -- renormalized volume ---------------------------------------------------------------
@dataclass
class RenormalizedVolume:
    c0: float
    c2: float
    V: float
    fitResidual: float
    diagEps2: float
    eps: tuple[float, ...]
    volumes: tuple[str, ...]  # high-precision decimal strings

    def as_dict(self) -> dict:
        return {"c0": self.c0, "c2": self.c2, "V": self.V, "fitResidual": self.fitResidual, "diagEps2": self.diagEps2, "epsGrid": list(self.eps)}


def _volume_setup(model: Model, method: str):
    cc = _require_cc(model)
    if method == "auto":
        method = "collar" if cc.geodesic_collar is not None else "chart"
    if method == "collar":
        if cc.geodesic_collar is None:
            raise ValueError("collar volume path needs a registered geodesic collar")
        fieldc = cc.geodesic_collar.metric_field()
        return fieldc, (lambda xs: xs[0]), None, method
    if cc.geodesic_r is None:
        raise ValueError("renormalized volume needs an analytic geodesic defining function")
    return model.field, cc.rho, cc.geodesic_r, method


def _check_grid(eps_grid, depth):
    e = [float(x) for x in eps_grid]
    if len(e) < 4:
        raise ValueError("epsGrid needs at least 4 points")
    if any(b >= a for a, b in zip(e, e[1:])):
        raise ValueError("epsGrid must be strictly decreasing")
    if e[0] >= depth:
        raise ValueError("epsGrid must lie below the collar depth")
    return e


def renormalized_volume(
    model: Model,
    eps_grid=None,
    rule: QuadratureRule | None = None,
    method: str = "auto",
    split: float = 0.02,
) -> RenormalizedVolume:
    """Fit ``Vol({r > eps}) = c0 eps^-3 + c2 eps^-1 + V + o(1)``.

    In a chart ``q`` whose face is ``q = 0`` the volume density is
    ``q^-4 phi(q, x)`` with ``phi`` smooth.  Below ``q = split`` the order-6
    Taylor polynomial of ``phi`` is integrated analytically (so ``g_+`` is never
    sampled near the face); above it, Gauss panels on a geometric mesh.  The
    sum and the fit run in extended precision since ``eps^-3`` swamps ``V``
    in double arithmetic.
    """
    cc = _require_cc(model)
    rule = rule or QuadratureRule()
    eps = _check_grid(eps_grid if eps_grid is not None else cc.eps_grid, cc.depth)
    fieldc, rho, rfun, method = _volume_setup(model, method)
    ign = tuple(i - 1 for i in fieldc.ignorable if i > 0)
    xb, wb = rule.grid(fieldc.lo[1:], fieldc.hi[1:], ign)
    q_lo, q_hi = fieldc.lo[0], fieldc.hi[0]

    # Taylor coefficients of phi at the face, in extended precision: double rounding
    # here would leak eps^-2 cross terms into V on the finest windows
    order = 6
    saved = mp.mp.dps
    mp.mp.dps = MP_DPS
    try:
        return _renormalized_volume_mp(fieldc, rho, rfun, xb, wb, q_lo, q_hi, eps, rule, split, order)
    finally:
        mp.mp.dps = saved


def _renormalized_volume_mp(fieldc, rho, rfun, xb, wb, q_lo, q_hi, eps, rule, split, order):
    nb = len(xb)
    T = [_phi_taylor(fieldc, rho, q_lo, x, order) for x in xb]

    # far part in double precision
    far = 0.0
    a = split
    while a < q_hi - q_lo:
        b = min(2 * a, q_hi - q_lo)
        qn, qw = rule.nodes_1d(q_lo + a, q_lo + b)
        pts = np.column_stack([np.repeat(qn, nb), np.tile(xb, (len(qn), 1))])
        gv = np.moveaxis(metric_values(fieldc, pts), -1, 0)
        rv = np.asarray(rho([pts[:, i] for i in range(pts.shape[1])]), dtype=float)
        dens = np.sqrt(np.linalg.det(gv)) / rv**4
        far += float(np.sum(dens * np.repeat(qw, nb) * np.tile(wb, len(qn))))
        a = b

    qs = mp.mpf(split)
    Tm = [[T[n][k] for n in range(nb)] for k in range(order + 1)]
    wm = [mp.mpf(float(x)) for x in wb]

    def I(k, lo_):
        if k == 3:
            return mp.log(qs / lo_)
        return (qs ** (k - 3) - lo_ ** (k - 3)) / (k - 3)

    def q_of(e, x):
        if rfun is None:
            return mp.mpf(e)
        xm = [mp.mpf(float(c)) for c in x]
        fn = lambda q: rfun([q] + xm) - mp.mpf(e)  # noqa: E731
        return mp.findroot(fn, mp.mpf(e))

    if rfun is not None:
        r_split = np.asarray(rfun([np.full(nb, q_lo + split)] + [xb[:, i] for i in range(xb.shape[1])]), dtype=float)
        if np.any(r_split <= eps[0]):
            raise ValueError("split point lies inside the largest eps level set")
    vols = []
    for e in eps:
        tot = mp.mpf(far)
        if rfun is None:
            qe = mp.mpf(e)
            Ik = [I(k, qe) for k in range(order + 1)]
            for k in range(order + 1):
                tot += Ik[k] * mp.fsum(wm[n] * Tm[k][n] for n in range(nb))
        else:
            for n in range(nb):
                qe = q_of(e, xb[n])
                tot += wm[n] * mp.fsum(Tm[k][n] * I(k, qe) for k in range(order + 1))
        vols.append(tot)
    c0, c2, V, resid, diag = _volume_fit(eps, vols)
    return RenormalizedVolume(c0, c2, V, resid, diag, tuple(eps), tuple(mp.nstr(v, 30) for v in vols))


def _phi_taylor(fieldc, rho, q0, x, order: int) -> list:
    """Taylor coefficients in q of ``(q / rho)^4 sqrt(det g)`` at the face point ``(q0, x)``."""
    xm = [mp.mpf(float(c)) for c in x]

    def phi(q):
        xs = [mp.mpf(q0) + q] + xm
        comps = fieldc.components(xs)
        n = len(comps)
        G = mp.matrix(n, n)
        for a in range(n):
            for b in range(a, n):
                G[a, b] = G[b, a] = mp.mpf(comps[a][b])
        return (q / rho(xs)) ** 4 * mp.sqrt(mp.det(G))

    return mp.taylor(phi, 0, order, singular=True)


def _volume_fit(eps, vols):
    emax = mp.mpf(max(eps))
    xs = [mp.mpf(e) / emax for e in eps]

    def solve(powers):
        A = mp.matrix([[x ** (-p) for p in powers] for x in xs])
        Ad = np.array([[float(x ** (-p)) for p in powers] for x in xs])
        cond = np.linalg.cond(Ad / np.max(np.abs(Ad), axis=0))
        if not np.isfinite(cond) or cond > 1e13:
            raise FitIllConditioned(f"volume fit condition {cond:.3g}")
        b = mp.matrix(vols)
        sol, res = mp.qr_solve(A, b)
        return [sol[i] * emax**p for i, p in enumerate(powers)], res

    (c0, c2, V), res = solve([3, 1, 0])
    (_, d2, _, _), _ = solve([3, 2, 1, 0])
    return float(c0), float(c2), float(V), float(res), float(d2)


# -- consistency report ----------------------------------------------------------------
def einstein_residual(model: Model, count: int = 16, seed: int = 0) -> float:
    """sup |Ric(g_+) + 3 g_+|_{g_+} at interior sample points."""
    gp = _require_cc(model).g_plus
    pts = gp.interior_points(count, seed, margin=0.1)
    c = Curvature(metric_jet(gp, pts, order=2))
    T = c.Ric.value + 3 * c.g.value
    gi = c.ginv.value
    return float(np.max(np.sqrt(np.abs(np.einsum("ab...,cd...,ac...,bd...->...", T, T, gi, gi)))))


def weyl_energy_gplus(model: Model, rule: QuadratureRule) -> float:
    """Weyl energy integrated with ``g_+`` itself (Gauss nodes never reach the face)."""
    gp = _require_cc(model).g_plus
    pts, w = rule.grid(gp.lo, gp.hi, gp.ignorable)

    def q(chunk):
        c = Curvature(metric_jet(gp, chunk, order=2))
        sq = np.sqrt(np.linalg.det(np.moveaxis(c.g.value, -1, 0)))
        return {"weyl": weyl_norm_sq(c.W.value, c.ginv.value) * sq}

    return integrate_many(pts, w, q)["weyl"]


def cce_consistency_report(model: Model, rule: QuadratureRule | None = None, eps_grid=None) -> dict:
    """Anderson formula, E = (3/2) V and S = -(3/2) g3, plus the FG and volume data they use.

    Checks tied to the Einstein condition are skipped (reported as ``None``)
    when the model is not flagged Einstein.
    """
    cc = _require_cc(model)
    rule = rule or QuadratureRule()
    rep = invariants_report(model, rule)
    fg = fg_coefficients(model)
    vol = renormalized_volume(model, eps_grid, rule)
    fg.volume = vol
    chart = cc.geodesic_collar.metric_field() if cc.geodesic_collar is not None else model.field
    S = FaceGeometry(chart, "lo", fg.xb, order=3).S
    w_plus = weyl_energy_gplus(model, rule)
    pi2 = math.pi**2
    einstein = cc.is_einstein
    out = {
        "model": model.name,
        "isEinstein": einstein,
        "chi": model.chi,
        "V": vol.V,
        "c0": vol.c0,
        "c2": vol.c2,
        "volumeFitResidual": vol.fitResidual,
        "diagEps2": vol.diagEps2,
        "weylEnergy": rep.weylEnergy,
        "weylEnergyGPlus": w_plus,
        "weylRouteDiff": abs(w_plus - rep.weylEnergy),
        "Einv": rep.Einv,
        "r1Coefficient": fg.r1,
        "supG2PlusHalfH": float(np.max(np.abs(fg.g2 + 0.5 * fg.h))),
        "supG3": float(np.max(np.abs(fg.g3))),
        "supS": float(np.max(np.abs(S))),
        "traceG3": fg.traceG3,
        "einsteinResidual": einstein_residual(model),
        "anderson": None,
        "EvsV": None,
        "SvsG3": None,
    }
    if einstein:
        out["anderson"] = abs(8 * pi2 * model.chi - rep.weylEnergy - 6 * vol.V) / (8 * pi2)
        out["EvsV"] = abs(rep.Einv - 1.5 * vol.V) / abs(rep.Einv)
        out["SvsG3"] = float(np.max(np.abs(S + 1.5 * fg.g3)))
    return out


def default_window(model: Model, scale: float = 1e-2) -> tuple[float, ...]:
    """A second eps window, disjoint from the model's own, ``scale`` times smaller."""
    return tuple(e * scale for e in _require_cc(model).eps_grid)


__all__ = [
    "FGExpansion",
    "GeodesicReport",
    "RenormalizedVolume",
    "cce_consistency_report",
    "default_window",
    "einstein_residual",
    "fg_coefficients",
    "geodesic_defining_function",
    "renormalized_volume",
    "rho_normalization",
    "weyl_energy_gplus",
]
