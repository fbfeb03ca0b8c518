"""Metric fields on coordinate boxes and their jets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .errors import ExpressionDomainError, NonPositiveDefinite

ComponentFn = Callable[[Sequence], Sequence[Sequence]]


@dataclass(frozen=True)
class MetricField:
    """A symmetric metric ``g_ab(x)`` on the box ``lo <= x <= hi``.

    ``components`` maps a list of coordinate values (floats, arrays or jets)
    to an ``n x n`` nested list; only the upper triangle is read.
    ``ignorable`` lists coordinate indices on which no component depends,
    which lets quadrature integrate those axes exactly.
    """

    name: str
    coords: tuple[str, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    components: ComponentFn = field(compare=False)
    ignorable: tuple[int, ...] = ()
    orientation: int = 1

    @property
    def dim(self) -> int:
        return len(self.coords)

    def interior_points(self, count: int, seed: int = 0, margin: float = 0.05) -> np.ndarray:
        """Uniform random points kept ``margin`` (relative) away from every face."""
        rng = np.random.default_rng(seed)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        span = hi - lo
        u = rng.uniform(margin, 1 - margin, size=(count, self.dim))
        return lo + u * span


def _lift(v, template: J.Jet) -> J.Jet:
    if isinstance(v, J.Jet):
        return v
    arr = np.broadcast_to(np.asarray(v, dtype=float), template.shape)
    return J.Jet.constant(arr, template.n, template.order)


def metric_jet(field: MetricField, points: np.ndarray, order: int = 2, check: bool = True, active=None) -> J.Jet:
    """Jets of ``g_ab`` at ``points`` (shape (N, n)); tensor shape (n, n).

    ``active`` restricts differentiation to a subset of coordinates.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if active is None:
        xs = J.Jet.variables(points, order)
        template = xs[0]
    else:
        xs = J.Jet.seed(points, order, active)
        template = xs[list(active)[0]]
    try:
        comps = field.components(xs)
    except ExpressionDomainError as exc:
        raise exc.at(points) from None
    n = field.dim
    rows = []
    for a in range(n):
        row = []
        for b in range(n):
            v = comps[a][b] if a <= b else comps[b][a]
            row.append(_lift(v, template))
        rows.append(J.stack(row, 0))
    g = J.stack(rows, 0)
    if check:
        check_positive(g.value, points)
    return g


def check_positive(g0: np.ndarray, points: np.ndarray, floor: float = 0.0):
    """Raise unless each (n, n, N) metric sample is positive definite.

    The default floor is zero: polar charts legitimately give eigenvalues far
    below 1e-12 at Gauss nodes next to a coordinate axis.
    """
    if not np.all(np.isfinite(g0)):
        bad = ~np.all(np.isfinite(g0), axis=(0, 1))
        raise ExpressionDomainError("metric component not finite", bad).at(points)
    ev = np.linalg.eigvalsh(np.moveaxis(g0, -1, 0))[:, 0]
    k = int(np.argmin(ev))
    if ev[k] <= floor:
        raise NonPositiveDefinite(tuple(float(v) for v in points[k]), float(ev[k]))


def metric_values(field: MetricField, points: np.ndarray) -> np.ndarray:
    """Plain metric values, shape (n, n, N)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    xs = [points[:, i] for i in range(field.dim)]
    comps = field.components(xs)
    n = field.dim
    out = np.empty((n, n, points.shape[0]))
    for a in range(n):
        for b in range(a, n):
            out[a, b] = out[b, a] = np.broadcast_to(np.asarray(comps[a][b], dtype=float), points.shape[:1])
    return out


def metric_jet_fd(field: MetricField, points: np.ndarray, order: int = 2, step: float = 1e-3) -> J.Jet:
    """Finite-difference cross-check backend (orders <= 2).

    Central differences with one Richardson extrapolation (steps h and h/2).
    Slow and noisy compared with the jet backend; used only to test it.
    """
    if order > 2:
        raise ValueError("finite-difference backend supports order <= 2")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = field.dim
    mon = J.monomials(n)
    m = J.size(n, order)
    out = np.zeros((m, n, n, points.shape[0]))
    out[0] = metric_values(field, points)

    def ev(shift):
        return metric_values(field, points + shift)

    def d1(mu, h):
        e = np.zeros(n)
        e[mu] = h
        return (ev(e) - ev(-e)) / (2 * h)

    def d2(mu, nu, h):
        e, f = np.zeros(n), np.zeros(n)
        e[mu] = h
        f[nu] = h
        if mu == nu:
            return (ev(e) - 2 * out[0] + ev(-e)) / h**2
        return (ev(e + f) - ev(e - f) - ev(-e + f) + ev(-e - f)) / (4 * h * h)

    def rich(fn, *args):
        a, b = fn(*args, step), fn(*args, step / 2)
        return (4 * b - a) / 3

    for i in range(1, m):
        alpha = mon.alphas[i]
        nz = np.flatnonzero(alpha)
        if mon.deg[i] == 1:
            val = rich(d1, nz[0])
        else:
            mu, nu = (nz[0], nz[0]) if len(nz) == 1 else (nz[0], nz[1])
            val = rich(d2, mu, nu)
        out[i] = val / mon.factorial[i]
    return J.Jet(out, n, order)


def from_expressions(name: str, coords, lo, hi, exprs) -> MetricField:
    """Build a field from an ``n x n`` array of compiled expressions (upper triangle read)."""
    from .expr import Num, compile_expr

    coords = tuple(coords)
    n = len(coords)
    compiled = [[None] * n for _ in range(n)]
    used = set()
    for a in range(n):
        for b in range(a, n):
            e = exprs[a][b]
            c = compile_expr(e if not isinstance(e, (int, float)) else Num(float(e)), coords)
            compiled[a][b] = c
            used |= c.depends_on

    def components(xs):
        return [[compiled[a][b](*xs) if a <= b else None for b in range(n)] for a in range(n)]

    ignorable = tuple(i for i, c in enumerate(coords) if c not in used)
    return MetricField(name, coords, tuple(map(float, lo)), tuple(map(float, hi)), components, ignorable)
