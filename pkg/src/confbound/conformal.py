"""Conformal rescaling, invariance checks and a finite-dimensional Yamabe estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from . import fmath as m
from . import jets as J
from .boundary import FaceGeometry
from .curvature import Curvature, bach_from
from .expr import Expr, compile_expr, free_variables, parse, to_string
from .invariants import boundary_nodes, boundary_sample, invariants_report
from .metric import MetricField, metric_jet
from .models import Model, with_field
from .quadrature import QuadratureRule


@dataclass(frozen=True)
class ConformalFactor:
    """A scalar ``w`` on the chart; ``fn`` maps a coordinate list to a value or jet.

    ``independent`` lists coordinate indices ``w`` does not depend on, so
    rescaling keeps those quadrature axes ignorable.
    """

    fn: Callable = field(compare=False)
    independent: tuple[int, ...] = ()
    source: str = ""

    def __call__(self, xs):
        return self.fn(xs)


def conformal_factor(w, coords: Sequence[str], independent: tuple[int, ...] | None = None) -> ConformalFactor:
    """Coerce an expression string, AST, number or callable into a :class:`ConformalFactor`."""
    coords = tuple(coords)
    if isinstance(w, ConformalFactor):
        return w
    if isinstance(w, (int, float)):
        c = float(w)
        return ConformalFactor(lambda xs: 0.0 * xs[0] + c, tuple(range(len(coords))), repr(c))
    if isinstance(w, (str, Expr)):
        e = parse(w, coords) if isinstance(w, str) else w
        comp = compile_expr(e, coords)
        free = free_variables(e)
        ind = tuple(i for i, c in enumerate(coords) if c not in free)
        return ConformalFactor(lambda xs: comp(*xs), ind, to_string(e))
    if callable(w):
        return ConformalFactor(w, tuple(independent or ()), getattr(w, "__name__", "callable"))
    raise TypeError(f"cannot interpret {w!r} as a conformal factor")


def rescale(fieldm: MetricField, w) -> MetricField:
    """The metric ``e^{2w} g`` built at expression level, so its jets are exact."""
    w = conformal_factor(w, fieldm.coords)
    comps = fieldm.components

    def components(xs):
        g = comps(xs)
        e = m.exp(2 * w(xs))
        n = len(g)
        return [[g[a][b] * e if a <= b else None for b in range(n)] for a in range(n)]

    ign = tuple(i for i in fieldm.ignorable if i in w.independent)
    name = f"{fieldm.name}*exp(2w)"
    return MetricField(name, fieldm.coords, fieldm.lo, fieldm.hi, components, ign, fieldm.orientation)


def rescale_model(model: Model, w) -> Model:
    """Model data for ``e^{2w} g``; the rescaled metric is no longer in collar gauge."""
    return with_field(model, rescale(model.field, w))


def random_factor(model: Model, seed: int = 0, scale: float = 0.2) -> ConformalFactor:
    """A smooth random ``w``: a quadratic polynomial in the model's global test functions.

    The test functions are smooth on the manifold (not just on the chart) and
    independent of the last coordinate, which stays ignorable.
    """
    if model.ambient is None:
        raise ValueError(f"model '{model.name}' has no global test functions")
    rng = np.random.default_rng([seed, 991])
    k = len(model.ambient([0.3] * model.field.dim))
    lin = rng.normal(size=k) * scale
    quad = rng.normal(size=(k, k)) * scale * 0.5
    const = rng.normal() * scale
    amb = model.ambient

    def w(xs):
        y = amb(xs)
        out = const + 0.0 * xs[0]
        for i in range(k):
            out = out + lin[i] * y[i]
            for j in range(i, k):
                out = out + quad[i, j] * y[i] * y[j]
        return out

    n = model.field.dim
    return ConformalFactor(w, (n - 1,), f"random(seed={seed})")


def _jet_at(w: ConformalFactor, points: np.ndarray, order: int) -> J.Jet:
    xs = J.Jet.variables(points, order)
    v = w(xs)
    if not isinstance(v, J.Jet):
        v = J.Jet.constant(np.broadcast_to(np.asarray(v, dtype=float), (len(points),)), len(xs), order)
    return v


def scalar_law_residual(fieldm: MetricField, w, points: np.ndarray) -> float:
    """sup |R(e^{2w}g) - e^{-2w}(R - 6 lap w - 6 |dw|^2)| with both sides from independent computations."""
    w = conformal_factor(w, fieldm.coords)
    cg = Curvature(metric_jet(fieldm, points, order=2))
    cw = Curvature(metric_jet(rescale(fieldm, w), points, order=2))
    wj = _jet_at(w, points, 2)
    dw = wj.grad().value
    hess = wj.grad().grad().value
    ginv = cg.ginv.value
    Gam = cg.Gamma.value  # [c, a, b] = Gamma^c_ab
    lap = np.einsum("ab...,ab...->...", ginv, hess - np.einsum("cab...,c...->ab...", Gam, dw))
    grad2 = np.einsum("ab...,a...,b...->...", ginv, dw, dw)
    pred = np.exp(-2 * wj.value) * (cg.R.value - 6 * lap - 6 * grad2)
    return float(np.max(np.abs(cw.R.value - pred)))


def invariance_residuals(model: Model, w, rule: QuadratureRule | None = None, points: int = 16, seed: int = 0) -> dict:
    """Residuals of the conformal laws between ``g`` and ``e^{2w} g``.

    Integrated: W_b, E and beta.  Pointwise: Bach ``B~ = e^{-2w} B`` at interior
    sample points and ``S~ = e^{-w} S`` on a boundary sample.  Boundary data of
    the rescaled metric come from the general hypersurface formulas in the same
    coordinates.
    """
    rule = rule or QuadratureRule()
    w = conformal_factor(w, model.field.coords)
    mw = rescale_model(model, w)
    r0 = invariants_report(model, rule)
    r1 = invariants_report(mw, rule)
    out = {
        "model": model.name,
        "w": w.source,
        "Wb": abs(r1.Wb - r0.Wb),
        "E": abs(r1.Einv - r0.Einv),
        "beta": abs(r1.betaB - r0.betaB) if r0.betaB is not None and r1.betaB is not None else None,
        "WbValue": r0.Wb,
        "EValue": r0.Einv,
    }
    pts = model.field.interior_points(points, seed)
    B0 = bach_from(Curvature(metric_jet(model.field, pts, order=4)))
    B1 = bach_from(Curvature(metric_jet(mw.field, pts, order=4)))
    ew = np.exp(np.asarray(_jet_at(w, pts, 0).value, dtype=float))
    out["bachLaw"] = float(np.max(np.abs(B1 - ew**-2 * B0)))
    out["SLaw"] = 0.0
    if not model.closed:
        xb = boundary_sample(model)
        for face in model.faces:
            f0 = FaceGeometry(model.field, face, xb, order=3)
            f1 = FaceGeometry(mw.field, face, xb, order=3)
            ewb = np.exp(_jet_at(w, f0.points, 0).value)
            out["SLaw"] = max(out["SLaw"], float(np.max(np.abs(f1.S - f0.S / ewb))))
    return out


# -- Yamabe-type functional -----------------------------------------------------
@dataclass(frozen=True)
class YamabeEstimate:
    basis: tuple[str, ...]
    coefficients: tuple[float, ...]
    value: float
    start: float
    iterations: int
    converged: bool
    recomputed: float | None = None

    def as_dict(self) -> dict:
        return {
            "basis": list(self.basis),
            "coefficients": list(self.coefficients),
            "value": self.value,
            "start": self.start,
            "iterations": self.iterations,
            "converged": self.converged,
            "recomputed": self.recomputed,
        }


@dataclass(frozen=True)
class OptimizerConfig:
    max_iter: int = 500
    simplex_scale: float = 0.1
    tol: float = 1e-8


class _Functional:
    """F_b(e^{2u} g) for u in the span of a basis, from data precomputed at quadrature nodes.

    With ``u`` smooth on the manifold, integrating the scalar-curvature law by
    parts turns the numerator into ``int e^{2u}(R + 6|du|^2) dv + 2 int e^{2u} H dsigma``
    (the normal-derivative boundary terms cancel) and the volume into
    ``int e^{4u} dv``.
    """

    def __init__(self, model: Model, basis: list[ConformalFactor], rule: QuadratureRule):
        f = model.field
        pts, wts = rule.grid(f.lo, f.hi, tuple(i for i in f.ignorable if all(i in b.independent for b in basis)))
        k = len(basis)
        cols = {}

        def node_data(chunk):
            c = Curvature(metric_jet(f, chunk, order=2))
            sq = np.sqrt(np.linalg.det(np.moveaxis(c.g.value, -1, 0)))
            d = {"R": c.R.value * sq, "vol": sq}
            ginv = c.ginv.value
            grads = []
            for i, b in enumerate(basis):
                jb = _jet_at(b, chunk, 1)
                d[f"u{i}"] = jb.value
                grads.append(jb.grad().value)
            for i in range(k):
                for j in range(i, k):
                    d[f"G{i}{j}"] = np.einsum("ab...,a...,b...->...", ginv, grads[i], grads[j]) * sq
            return d

        # store node values rather than integrals: the objective is nonlinear in u
        for s in range(0, len(wts), 4096):
            part = node_data(pts[s : s + 4096])
            for key, v in part.items():
                cols.setdefault(key, []).append(np.broadcast_to(np.asarray(v, dtype=float), (len(pts[s : s + 4096]),)))
        self.w = wts
        self.R = np.concatenate(cols["R"])
        self.vol = np.concatenate(cols["vol"])
        self.U = np.stack([np.concatenate(cols[f"u{i}"]) for i in range(k)]) if k else np.zeros((0, len(wts)))
        G = np.zeros((k, k, len(wts)))
        for i in range(k):
            for j in range(i, k):
                G[i, j] = G[j, i] = np.concatenate(cols[f"G{i}{j}"])
        self.G = G
        self.bw = []
        if not model.closed:
            xb, bwt = boundary_nodes(model, rule)
            for face in model.faces:
                fg = FaceGeometry(f, face, xb, order=2)
                ub = np.stack([_jet_at(b, fg.points, 0).value for b in basis]) if k else np.zeros((0, len(bwt)))
                self.bw.append((fg.H * fg.sqrt_det_h * bwt, ub))

    def __call__(self, c: np.ndarray) -> float:
        c = np.asarray(c, dtype=float)
        u = c @ self.U if len(c) else np.zeros_like(self.w)
        grad2 = np.einsum("i,j,ijn->n", c, c, self.G) if len(c) else 0.0
        e2 = np.exp(2 * u)
        num = np.sum(self.w * e2 * (self.R + 6 * grad2))
        for Hw, ub in self.bw:
            num += 2 * np.sum(Hw * np.exp(2 * (c @ ub if len(c) else 0.0)))
        vol = np.sum(self.w * np.exp(4 * u) * self.vol)
        return float(num / math.sqrt(vol))


def yamabe_estimate(
    model: Model,
    basis: Sequence = (),
    config: OptimizerConfig | None = None,
    rule: QuadratureRule | None = None,
    recompute: bool = False,
) -> YamabeEstimate:
    """Nelder-Mead minimisation of F_b over ``e^{2u} g`` with ``u`` in the span of ``basis``.

    The zero vector (the given metric) is a vertex of the initial simplex, so
    the result is never worse than the starting value.  ``recompute`` also
    evaluates F_b of the optimal metric through the full curvature pipeline.
    """
    config = config or OptimizerConfig()
    rule = rule or QuadratureRule()
    facs = [conformal_factor(b, model.field.coords) for b in basis]
    F = _Functional(model, facs, rule)
    k = len(facs)
    start = F(np.zeros(k))
    if k == 0:
        return YamabeEstimate((), (), start, start, 0, True, start if recompute else None)
    simplex = np.vstack([np.zeros(k), config.simplex_scale * np.eye(k)])
    res = minimize(
        F,
        np.zeros(k),
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "maxiter": config.max_iter, "xatol": config.tol, "fatol": config.tol * abs(start)},
    )
    coef, value = np.asarray(res.x), float(res.fun)
    if value > start:
        coef, value = np.zeros(k), start
    recomputed = None
    if recompute:
        u = ConformalFactor(lambda xs: sum(ci * b(xs) for ci, b in zip(coef, facs)), tuple(set.intersection(*(set(b.independent) for b in facs))))
        recomputed = invariants_report(rescale_model(model, u), rule).Fb
    return YamabeEstimate(tuple(b.source for b in facs), tuple(float(x) for x in coef), value, start, int(res.nit), bool(res.success), recomputed)


def radial_basis(model: Model, degree: int = 4) -> list[ConformalFactor]:
    """Powers ``q^2, q^4, ...`` of the squared radial ambient function for collar balls.

    For ball-type models the last global test function is ``|x|^2`` (flat ball)
    or the height (hemisphere); powers of it are smooth radial functions.
    """
    if model.ambient is None:
        raise ValueError(f"model '{model.name}' has no global test functions")
    amb = model.ambient
    n = model.field.dim
    return [ConformalFactor(lambda xs, p=p: amb(xs)[-1] ** p, tuple(range(1, n)), f"q^{p}") for p in range(1, degree + 1)]


__all__ = [
    "ConformalFactor",
    "OptimizerConfig",
    "YamabeEstimate",
    "conformal_factor",
    "invariance_residuals",
    "radial_basis",
    "random_factor",
    "rescale",
    "rescale_model",
    "scalar_law_residual",
    "yamabe_estimate",
]
