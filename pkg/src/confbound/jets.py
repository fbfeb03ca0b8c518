"""Truncated multivariate Taylor arithmetic ("jets").

A jet of order ``K`` in ``n`` variables stores the Taylor coefficients
``c[alpha] = d^alpha f / alpha!`` for every multi-index with ``|alpha| <= K``.
Coefficient arrays have shape ``(M, *tensor_axes, batch)``; the batch axis
(evaluation points) is always last so tensor contractions can use ``...``.

Monomials are ordered by total degree first, and the ordering inside each
degree does not depend on ``K``.  A lower-order table is therefore a prefix of
a higher-order one and truncation is plain slicing.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import ExpressionDomainError

MAX_ORDER = 8


class _Monomials:
    """Global monomial index for ``n`` variables up to ``MAX_ORDER``."""

    def __init__(self, n: int):
        self.n = n
        alphas = []
        for d in range(MAX_ORDER + 1):
            # reverse-lex inside a degree keeps x0 first
            block = [a for a in itertools.product(range(d + 1), repeat=n) if sum(a) == d]
            block.sort(reverse=True)
            alphas.extend(block)
        self.alphas = np.array(alphas, dtype=np.int64).reshape(-1, n)
        self.deg = self.alphas.sum(axis=1)
        self.index = {tuple(a): i for i, a in enumerate(alphas)}
        self.count_le = [int(np.sum(self.deg <= d)) for d in range(MAX_ORDER + 1)]
        self.factorial = np.array([math.prod(math.factorial(k) for k in a) for a in alphas], dtype=float)

    @lru_cache(maxsize=None)
    def shift(self, order: int) -> np.ndarray:
        """``shift[i, j]`` = index of alpha_i + alpha_j (or -1 past ``order``)."""
        m = self.count_le[order]
        out = -np.ones((m, m), dtype=np.int64)
        for i in range(m):
            for j in range(m):
                if self.deg[i] + self.deg[j] <= order:
                    out[i, j] = self.index[tuple(self.alphas[i] + self.alphas[j])]
        return out

    @lru_cache(maxsize=None)
    def deriv(self, order: int, mu: int):
        """Index/factor maps for d/dx_mu from an order-``order`` jet."""
        m = self.count_le[order - 1]
        idx = np.empty(m, dtype=np.int64)
        fac = np.empty(m, dtype=float)
        for j in range(m):
            a = self.alphas[j].copy()
            a[mu] += 1
            idx[j] = self.index[tuple(a)]
            fac[j] = a[mu]
        return idx, fac


@lru_cache(maxsize=None)
def monomials(n: int) -> _Monomials:
    return _Monomials(n)


def size(n: int, order: int) -> int:
    return monomials(n).count_le[order]


class Jet:
    """Truncated Taylor expansion of a (tensor-valued) function at a batch of points."""

    __slots__ = ("c", "n", "order")
    __array_priority__ = 100

    def __init__(self, c: np.ndarray, n: int, order: int):
        self.c = c
        self.n = n
        self.order = order

    # -- construction ----------------------------------------------------
    @classmethod
    def constant(cls, value, n: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((size(n, order),) + value.shape)
        c[0] = value
        return cls(c, n, order)

    @classmethod
    def variables(cls, points: np.ndarray, order: int) -> list["Jet"]:
        """Seed jets for each coordinate; ``points`` has shape (N, n)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[1]
        mon = monomials(n)
        out = []
        for mu in range(n):
            c = np.zeros((size(n, order), points.shape[0]))
            c[0] = points[:, mu]
            if order >= 1:
                e = [0] * n
                e[mu] = 1
                c[mon.index[tuple(e)]] = 1.0
            out.append(cls(c, n, order))
        return out

    @classmethod
    def seed(cls, points: np.ndarray, order: int, active) -> list:
        """Coordinates with jets only in the ``active`` indices; the rest stay plain arrays."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        active = list(active)
        jets = cls.variables(points[:, active], order)
        out = [points[:, mu].copy() for mu in range(points.shape[1])]
        for j, mu in enumerate(active):
            out[mu] = jets[j]
        return out

    def shift_down(self) -> "Jet":
        """``f / x`` for a one-variable jet with ``f(0) = 0`` at the expansion point (one order lost)."""
        if self.n != 1:
            raise ValueError("shift_down is defined for one-variable jets")
        return Jet(self.c[1:].copy(), 1, self.order - 1)

    # -- access ------------------------------------------------------------
    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    @property
    def shape(self):
        return self.c.shape[1:]

    def partial(self, alpha) -> np.ndarray:
        """The partial derivative d^alpha at the expansion point."""
        mon = monomials(self.n)
        i = mon.index[tuple(alpha)]
        if mon.deg[i] > self.order:
            raise ValueError(f"derivative {tuple(alpha)} exceeds jet order {self.order}")
        return self.c[i] * mon.factorial[i]

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.c[: size(self.n, order)], self.n, order)

    def deriv(self, mu: int) -> "Jet":
        """d/dx_mu as a jet of one lower order."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        idx, fac = monomials(self.n).deriv(self.order, mu)
        fac = fac.reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[idx] * fac, self.n, self.order - 1)

    def grad(self) -> "Jet":
        """All first partials, stacked as a new tensor axis just before the batch axis."""
        parts = [self.deriv(mu).c for mu in range(self.n)]
        return Jet(np.stack(parts, axis=-2), self.n, self.order - 1)

    def map(self, fn) -> "Jet":
        """Apply a linear, coefficient-wise array map (transpose, indexing, ...)."""
        return Jet(fn(self.c), self.n, self.order)

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.c[(slice(None),) + key], self.n, self.order)

    def __repr__(self):
        return f"Jet(n={self.n}, order={self.order}, shape={self.shape})"

    # -- arithmetic ----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.n != self.n:
                raise ValueError("jets over different variable counts")
            k = min(self.order, other.order)
            return self.truncate(k), other.truncate(k)
        return self, None

    def __neg__(self):
        return Jet(-self.c, self.n, self.order)

    def __pos__(self):
        return self

    def __add__(self, other):
        a, b = self._coerce(other)
        if b is None:
            c = a.c.copy() if np.ndim(other) == 0 else np.broadcast_to(a.c, a.c.shape[:1] + np.broadcast_shapes(a.shape, np.shape(other))).copy()
            c[0] = c[0] + other
            return Jet(c, a.n, a.order)
        return Jet(a.c + b.c, a.n, a.order)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._coerce(other)
        if b is None:
            return Jet(a.c * np.asarray(other, dtype=float)[None], a.n, a.order)
        return mul(a, b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            a, b = self._coerce(other)
            return _pin(mul(a, reciprocal(b)), a.value / b.value)
        return Jet(self.c / np.asarray(other, dtype=float)[None], self.n, self.order)

    def __rtruediv__(self, other):
        return _pin(reciprocal(self) * other, np.asarray(other, dtype=float) / self.value)

    def __pow__(self, p):
        return power(self, p)

    def __rpow__(self, base):
        return _pin(exp(self * np.log(base)), np.power(base, self.value))


def _pin(a: Jet, value) -> Jet:
    """Overwrite the value slot so it equals the plain floating-point result bit for bit."""
    a.c[0] = np.broadcast_to(value, a.c.shape[1:])
    return a


def mul(a: Jet, b: Jet) -> Jet:
    """Elementwise product with numpy broadcasting over tensor/batch axes."""
    k = min(a.order, b.order)
    a, b = a.truncate(k), b.truncate(k)
    mon = monomials(a.n)
    m = size(a.n, k)
    shift = mon.shift(k)
    out = np.zeros((m,) + np.broadcast_shapes(a.shape, b.shape))
    for i in range(m):
        nb = mon.count_le[k - mon.deg[i]]
        out[shift[i, :nb]] += a.c[i] * b.c[:nb]
    return Jet(out, a.n, k)


def contract(spec: str, a: Jet, b: Jet) -> Jet:
    """Jet-valued ``einsum`` over tensor axes, e.g. ``contract('ab,bc->ac', g, h)``.

    The batch axis is implicit and must not appear in ``spec``.
    """
    lhs, out_idx = spec.replace(" ", "").split("->")
    ia, ib = lhs.split(",")
    k = min(a.order, b.order)
    a, b = a.truncate(k), b.truncate(k)
    mon = monomials(a.n)
    m = size(a.n, k)
    shift = mon.shift(k)
    sub = f"{ia}...,Z{ib}...->Z{out_idx}..."
    res0 = np.einsum(sub, a.c[0], b.c[:m])
    out = np.zeros_like(res0)
    out += res0
    for i in range(1, m):
        nb = mon.count_le[k - mon.deg[i]]
        out[shift[i, :nb]] += np.einsum(sub, a.c[i], b.c[:nb])
    return Jet(out, a.n, k)


def linear(spec: str, a: Jet, t) -> Jet:
    """Contract a jet with a constant (per-point) tensor ``t`` whose last axis is the batch."""
    lhs, out_idx = spec.replace(" ", "").split("->")
    ia, it = lhs.split(",")
    return Jet(np.einsum(f"Z{ia}...,{it}...->Z{out_idx}...", a.c, np.asarray(t, dtype=float)), a.n, a.order)


def stack(jets, axis: int) -> Jet:
    """Stack same-shape jets along a new tensor axis (``axis`` counts tensor axes)."""
    k = min(j.order for j in jets)
    cs = [j.truncate(k).c for j in jets]
    return Jet(np.stack(cs, axis=axis + 1), jets[0].n, k)


def _horner(a: Jet, coeffs) -> Jet:
    """sum_k coeffs[k] * (a - a0)^k with coeffs[k] arrays over the shape of ``a``."""
    d = Jet(a.c.copy(), a.n, a.order)
    d.c[0] = 0.0
    res = Jet.constant(coeffs[-1], a.n, a.order)
    for ck in reversed(coeffs[:-1]):
        res = mul(res, d)
        res.c[0] = res.c[0] + ck
    return res


def compose(a: Jet, derivs) -> Jet:
    """f(a) given the list [f(a0), f'(a0), ..., f^(K)(a0)]."""
    coeffs = [dk / math.factorial(k) for k, dk in enumerate(derivs[: a.order + 1])]
    if a.order == 0:
        return Jet(np.asarray(coeffs[0])[None].copy(), a.n, 0)
    return _horner(a, coeffs)


def exp(a: Jet) -> Jet:
    e = np.exp(a.value)
    return compose(a, [e] * (a.order + 1))


def log(a: Jet) -> Jet:
    x = a.value
    bad = x <= 0
    if np.any(bad):
        raise ExpressionDomainError("log of non-positive argument", bad)
    derivs = [np.log(x)] + [(-1.0) ** (k - 1) * math.factorial(k - 1) / x**k for k in range(1, a.order + 1)]
    return compose(a, derivs)


def sin(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    cyc = [s, c, -s, -c]
    return compose(a, [cyc[k % 4] for k in range(a.order + 1)])


def cos(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    cyc = [c, -s, -c, s]
    return compose(a, [cyc[k % 4] for k in range(a.order + 1)])


def tan(a: Jet) -> Jet:
    return _pin(sin(a) * reciprocal(cos(a)), np.tan(a.value))


def _real_power(a: Jet, p: float) -> Jet:
    x = a.value
    bad = x <= 0 if p < 0 else x < 0
    if np.any(bad):
        raise ExpressionDomainError(f"non-integer power {p} of negative argument", bad)
    derivs = []
    coef = 1.0
    for k in range(a.order + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            derivs.append(coef * np.power(x, p - k))
        coef *= p - k
    if np.any(x == 0) and a.order > 0:
        # sqrt-type singularity: derivatives blow up at zero
        raise ExpressionDomainError(f"power {p} is not differentiable at zero", x == 0)
    return compose(a, derivs)


def reciprocal(a: Jet) -> Jet:
    x = a.value
    bad = x == 0
    if np.any(bad):
        raise ExpressionDomainError("division by zero", bad)
    derivs = [(-1.0) ** k * math.factorial(k) / x ** (k + 1) for k in range(a.order + 1)]
    return compose(a, derivs)


def power(a: Jet, p) -> Jet:
    if isinstance(p, Jet):
        return _pin(exp(p * log(a)), np.power(a.value, p.value))
    p = float(p)
    if p.is_integer() and abs(p) <= 16:
        q = int(abs(p))
        base = a
        res = None
        while q:
            if q & 1:
                res = base if res is None else mul(res, base)
            q >>= 1
            if q:
                base = mul(base, base)
        if res is None:
            res = Jet.constant(np.ones(a.shape), a.n, a.order)
        x = a.value
        if p < 0:
            return _pin(reciprocal(res), np.divide(1.0, x ** int(-p)))
        return _pin(res, x ** int(p))
    return _real_power(a, p)


def sqrt(a: Jet) -> Jet:
    return _pin(_real_power(a, 0.5), np.sqrt(a.value))


def fabs(a: Jet) -> Jet:
    s = np.sign(a.value)
    if a.order > 0 and np.any(s == 0):
        raise ExpressionDomainError("abs is not differentiable at zero", s == 0)
    return Jet(a.c * s[None], a.n, a.order)


def inv(g: Jet) -> Jet:
    """Inverse of a jet-valued square matrix (tensor axes ``(n, n)``)."""
    g0 = np.moveaxis(g.c[0], -1, 0)
    g0inv = np.moveaxis(np.linalg.inv(g0), 0, -1)
    res = Jet.constant(g0inv, g.n, g.order)
    if g.order == 0:
        return res
    d = Jet(g.c.copy(), g.n, g.order)
    d.c[0] = 0.0
    # Neumann series: (g0 + d)^-1 = sum_k (-g0^-1 d)^k g0^-1, nilpotent d
    step = Jet(np.einsum("ab...,Zbc...->Zac...", g0inv, -d.c), d.n, d.order)
    term = res
    total = res
    for _ in range(g.order):
        term = contract("ab,bc->ac", step, term)
        total = total + term
    return total


def det(g: Jet) -> Jet:
    """Determinant of a jet-valued ``n x n`` matrix via cofactor recursion (n <= 4)."""
    n = g.shape[0]
    if n == 1:
        return g[0, 0]
    if n == 2:
        return g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    total = None
    for j in range(n):
        rows = list(range(1, n))
        cols = [c for c in range(n) if c != j]
        minor = Jet(g.c[:, 1:][:, :, cols], g.n, g.order)
        term = g[0, j] * det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total
