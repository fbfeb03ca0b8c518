"""Tensor-product Gauss-Legendre quadrature on coordinate boxes."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NodeEvaluationError

CHUNK = 4096


@dataclass(frozen=True)
class QuadratureRule:
    """``order`` Gauss-Legendre nodes per axis (exact to degree 2*order - 1)."""

    order: int = 24

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("quadrature order must be >= 2")

    def nodes_1d(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(self.order)
        half = 0.5 * (b - a)
        return a + half * (x + 1), half * w

    def grid(self, lo, hi, ignorable=()) -> tuple[np.ndarray, np.ndarray]:
        """Nodes (N, d) and weights (N,) over the box.

        Axes listed in ``ignorable`` get a single midpoint node weighted by the
        interval length, which is exact for integrands independent of them.
        """
        axes, weights = [], []
        for i, (a, b) in enumerate(zip(lo, hi)):
            if i in ignorable:
                axes.append(np.array([0.5 * (a + b)]))
                weights.append(np.array([b - a]))
            else:
                x, w = self.nodes_1d(a, b)
                axes.append(x)
                weights.append(w)
        mesh = np.meshgrid(*axes, indexing="ij")
        wmesh = np.meshgrid(*weights, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        w = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
        return pts, w


def thread_cap() -> int:
    """Parallelism cap from ``CONFBOUND_THREADS`` (evaluation here is vectorised, so this only bounds chunking)."""
    try:
        return max(1, int(os.environ.get("CONFBOUND_THREADS", os.cpu_count() or 1)))
    except ValueError:
        return 1


def integrate_many(pts: np.ndarray, w: np.ndarray, fn: Callable[[np.ndarray], dict], chunk: int = CHUNK) -> dict:
    """Like :func:`integrate` for an integrand returning several named values per node."""
    vals: dict[str, np.ndarray] = {}
    for s in range(0, len(w), chunk):
        part = fn(pts[s : s + chunk])
        for key, v in part.items():
            arr = vals.setdefault(key, np.empty(len(w)))
            arr[s : s + chunk] = np.broadcast_to(np.asarray(v, dtype=float), (min(chunk, len(w) - s),))
    out = {}
    for key, arr in vals.items():
        bad = ~np.isfinite(arr)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise NodeEvaluationError(tuple(float(c) for c in pts[k]), f"non-finite value of '{key}'")
        out[key] = float(np.sum(arr * w))
    return out


def integrate(pts: np.ndarray, w: np.ndarray, fn: Callable[[np.ndarray], np.ndarray], chunk: int = CHUNK) -> float:
    """Sum ``w * fn(pts)`` in fixed-size chunks with deterministic pairwise summation."""
    vals = np.empty(len(w))
    for s in range(0, len(w), chunk):
        v = np.asarray(fn(pts[s : s + chunk]), dtype=float)
        vals[s : s + chunk] = np.broadcast_to(v, (min(chunk, len(w) - s),))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise NodeEvaluationError(tuple(float(c) for c in pts[k]), "non-finite integrand value")
    return float(np.sum(vals * w))
