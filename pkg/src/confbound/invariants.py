"""Integrated invariants and the theorem-hypothesis report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .boundary import FaceGeometry
from .curvature import Curvature, CurvatureBundle, bach_from, bundle_from
from .errors import NodeEvaluationError
from .metric import metric_jet
from .models import Model
from .quadrature import QuadratureRule, integrate, integrate_many

EIGHT_PI2 = 8 * math.pi**2
# E below this is treated as non-positive, so quadrature noise on E = 0 models leaves beta undefined
ENERGY_FLOOR = 1e-9 * EIGHT_PI2
HEMISPHERE_CONCLUSION = "conformally equivalent to (S^4_+, S^3, g_{S^4_+})"


@dataclass(frozen=True)
class InvariantReport:
    weylEnergy: float
    sigma2Integral: float
    boundaryB: float
    Einv: float
    betaB: float | None
    Wb: float
    Fb: float
    cgbResidual: float
    volume: float
    boundaryArea: float
    scalarIntegral: float
    meanCurvatureIntegral: float
    chi: int

    @property
    def beta_defined(self) -> bool:
        return self.betaB is not None

    def as_dict(self) -> dict:
        return asdict(self)


def bulk_integrals(model: Model, rule: QuadratureRule) -> dict:
    f = model.field
    pts, w = rule.grid(f.lo, f.hi, f.ignorable)

    def quantities(chunk):
        b = bundle_from(Curvature(metric_jet(f, chunk, order=2)))
        sq = b.sqrt_det
        return {"weyl": b.weylNormSq * sq, "sigma2": b.sigma2P * sq, "vol": sq, "R": b.R * sq}

    return integrate_many(pts, w, quantities)


def integrate_bulk(field, integrand: Callable[[CurvatureBundle], np.ndarray], rule: QuadratureRule | None = None) -> float:
    """Quadrature of ``integrand(bundle) * sqrt(det g)`` over the chart box."""
    rule = rule or QuadratureRule()
    pts, w = rule.grid(field.lo, field.hi, field.ignorable)

    def fn(chunk):
        b = bundle_from(Curvature(metric_jet(field, chunk, order=2)))
        return integrand(b) * b.sqrt_det

    return integrate(pts, w, fn)


def integrate_boundary(model: Model, integrand: Callable[[FaceGeometry], np.ndarray], rule: QuadratureRule | None = None) -> float:
    """Sum over boundary faces of the quadrature of ``integrand(face) * sqrt(det h0)``."""
    rule = rule or QuadratureRule()
    if model.closed:
        return 0.0
    xb, w = boundary_nodes(model, rule)
    total = 0.0
    for face in model.faces:
        fg = FaceGeometry(model.field, face, xb, order=2)
        vals = np.broadcast_to(np.asarray(integrand(fg), dtype=float), w.shape) * fg.sqrt_det_h
        bad = ~np.isfinite(vals)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise NodeEvaluationError(tuple(float(c) for c in xb[k]), "non-finite boundary integrand value")
        total += float(np.sum(vals * w))
    return total


def boundary_nodes(model: Model, rule: QuadratureRule):
    f = model.field
    ign = tuple(i - 1 for i in f.ignorable if i > 0)
    return rule.grid(f.lo[1:], f.hi[1:], ign)


def boundary_integrals(model: Model, rule: QuadratureRule) -> dict:
    totals = {"B": 0.0, "area": 0.0, "H": 0.0, "WL": 0.0}
    if model.closed:
        return totals
    xb, w = boundary_nodes(model, rule)
    for face in model.faces:
        fg = FaceGeometry(model.field, face, xb, order=2)
        sq = fg.sqrt_det_h
        totals["B"] += float(np.sum(fg.B_integrand * sq * w))
        totals["area"] += float(np.sum(sq * w))
        totals["H"] += float(np.sum(fg.H * sq * w))
        totals["WL"] += float(np.sum(fg.W_i0j0_L * sq * w))
    return totals


def invariants_report(model: Model, rule: QuadratureRule | None = None) -> InvariantReport:
    rule = rule or QuadratureRule()
    bulk = bulk_integrals(model, rule)
    bd = boundary_integrals(model, rule)
    E = bulk["sigma2"] + 0.5 * bd["B"]
    beta = bulk["weyl"] / E if E > ENERGY_FLOOR else None
    Fb = (bulk["R"] + 2 * bd["H"]) / math.sqrt(bulk["vol"])
    return InvariantReport(
        weylEnergy=bulk["weyl"],
        sigma2Integral=bulk["sigma2"],
        boundaryB=bd["B"],
        Einv=E,
        betaB=beta,
        Wb=bulk["weyl"] + 2 * bd["WL"],
        Fb=Fb,
        cgbResidual=EIGHT_PI2 * model.chi - bulk["weyl"] - 4 * E,
        volume=bulk["vol"],
        boundaryArea=bd["area"],
        scalarIntegral=bulk["R"],
        meanCurvatureIntegral=bd["H"],
        chi=model.chi,
    )


def total_energy(model: Model, rule: QuadratureRule) -> float:
    """F_b = Vol^{-1/2} (int R dv + 2 int H dsigma)."""
    bulk = bulk_integrals(model, rule)
    bd = boundary_integrals(model, rule)
    return (bulk["R"] + 2 * bd["H"]) / math.sqrt(bulk["vol"])


# -- pointwise sup norms used by the hypothesis report -----------------------------
# polar charts amplify round-off in fourth derivatives like (distance to a coordinate axis)^-4,
# so the Bach sample stays this far (relative) from every chart face
BACH_SAMPLE_MARGIN = 0.15


def sup_bach(model: Model, count: int = 48, seed: int = 0, margin: float = BACH_SAMPLE_MARGIN) -> float:
    pts = model.field.interior_points(count, seed, margin)
    B = bach_from(Curvature(metric_jet(model.field, pts, order=4)))
    return float(np.max(np.abs(B)))


def boundary_sample(model: Model, order: int = 6) -> np.ndarray:
    xb, _ = boundary_nodes(model, QuadratureRule(order))
    return xb


def sup_boundary(model: Model, order: int = 6) -> dict:
    """Sup over a boundary sample of |S|, |L| and the umbilic defect."""
    out = {"S": 0.0, "L": 0.0, "umbilicDefect": 0.0}
    if model.closed:
        return out
    xb = boundary_sample(model, order)
    for face in model.faces:
        fg = FaceGeometry(model.field, face, xb, order=3)
        out["S"] = max(out["S"], float(np.max(np.abs(fg.S))))
        out["L"] = max(out["L"], float(np.max(np.abs(fg.L))))
        out["umbilicDefect"] = max(out["umbilicDefect"], float(np.max(fg.umbilic_defect)))
    return out


THEOREMS = {
    "vanishingH1": "H^1(M,Sigma) = H^1(M) = 0 and Sigma is connected",
    "homologyBallBeta8": "double homeomorphic to S^4, Sigma a homology S^3, M a homology B^4",
    "smoothBallBeta4": "M diffeomorphic to B^4 and Sigma diffeomorphic to S^3",
    "rigidityBeta4": HEMISPHERE_CONCLUSION,
    "rigidityEnergy": HEMISPHERE_CONCLUSION,
    "rigidityWeylBoundary": HEMISPHERE_CONCLUSION,
    "homologyBallPinched": "double homeomorphic to S^4, Sigma a homology S^3, M a homology B^4",
}


def hypothesis_report(
    model: Model,
    rule: QuadratureRule | None = None,
    eps: float = 0.0,
    eps1: float = 0.0,
    eps2: float = 0.0,
    tol: float = 1e-6,
    rel_tol: float = 1e-5,
    report: InvariantReport | None = None,
) -> dict:
    """Numeric predicates for the theorem hypotheses and the conclusions they license.

    Yamabe positivity is a necessary-condition surrogate (F_b at the given
    metric), not a certificate.  Threshold comparisons use ``rel_tol``
    relative slack conservatively: a strict bound must hold with that margin
    and a non-strict bound may be met within it, so quadrature noise at an
    equality case never reports a hypothesis that fails.
    ``eps`` is carried for the renormalized-volume corollary and only reported.
    """
    rule = rule or QuadratureRule()
    rep = report or invariants_report(model, rule)
    bd = sup_boundary(model)
    sup_B = sup_bach(model)
    pi2 = math.pi**2
    slack = lambda x: rel_tol * max(1.0, abs(x))  # noqa: E731
    beta = rep.betaB
    pred = {
        "yamabePositiveSurrogate": rep.Fb > 0,
        "yamabeSurrogateLabel": "necessary-condition surrogate",
        "EPositive": rep.Einv > ENERGY_FLOOR,
        "umbilic": (not model.closed) and bd["umbilicDefect"] < tol,
        "totallyGeodesic": (not model.closed) and bd["L"] < tol,
        "bachFlat": sup_B < tol,
        "sFlat": (not model.closed) and bd["S"] < tol,
        "betaBelow8": beta is not None and -slack(0) <= beta < 8 - slack(8),
        "betaBelow4": beta is not None and -slack(0) <= beta < 4 - slack(4),
        "EAboveThreshold": rep.Einv >= 2 * (1 - eps1) * pi2 - slack(2 * pi2),
        "WbBelow4pi2": rep.Wb < 4 * pi2 - slack(4 * pi2),
        "betaBelow8eps2": beta is not None and -slack(0) <= beta < 8 * (1 + eps2) - slack(8),
    }
    pred["Y2plus"] = pred["yamabePositiveSurrogate"] and pred["EPositive"]
    rigid = pred["Y2plus"] and pred["bachFlat"] and pred["sFlat"] and pred["umbilic"]
    hyps = {
        "vanishingH1": pred["Y2plus"] and pred["umbilic"],
        "homologyBallBeta8": pred["Y2plus"] and pred["umbilic"] and pred["betaBelow8"],
        "smoothBallBeta4": pred["Y2plus"] and pred["umbilic"] and pred["betaBelow4"],
        "rigidityBeta4": rigid and pred["betaBelow4"],
        "rigidityEnergy": rigid and pred["EAboveThreshold"],
        "rigidityWeylBoundary": rigid and pred["WbBelow4pi2"],
        "homologyBallPinched": rigid and pred["betaBelow8eps2"],
    }
    if model.closed:
        hyps = {k: False for k in hyps}
    conclusions = [f"{k}: {THEOREMS[k]}" for k, ok in hyps.items() if ok]
    return {
        "model": model.name,
        "predicates": pred,
        "hypothesesSatisfied": hyps,
        "conclusions": conclusions,
        "supBach": sup_B,
        "supS": bd["S"],
        "umbilicDefect": bd["umbilicDefect"],
        "supL": bd["L"],
        "userEps": {"eps": eps, "eps1": eps1, "eps2": eps2},
        "boundaryTheoremsApplicable": not model.closed,
    }
