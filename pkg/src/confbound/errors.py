"""Exception types shared across the toolkit."""

from __future__ import annotations

import numpy as np


class ConfboundError(Exception):
    """Base class for all toolkit errors."""


class ExpressionDomainError(ConfboundError, ValueError):
    """A primitive was evaluated outside its domain (log of a negative, ...).

    ``mask`` marks the offending batch entries; ``coordinate`` is filled in by
    callers that know which points were being evaluated.
    """

    def __init__(self, message: str, mask=None, coordinate=None):
        self.mask = None if mask is None else np.asarray(mask)
        self.coordinate = coordinate
        super().__init__(message if coordinate is None else f"{message} at {coordinate}")

    def at(self, points: np.ndarray) -> "ExpressionDomainError":
        """Return a copy of the error carrying the first offending coordinate."""
        coord = None
        if self.mask is not None and points is not None:
            flat = np.flatnonzero(np.broadcast_to(self.mask, points.shape[:1]))
            if flat.size:
                coord = tuple(float(v) for v in points[flat[0]])
        msg = self.args[0].split(" at (")[0]
        return ExpressionDomainError(msg, self.mask, coord)


class NonPositiveDefinite(ConfboundError, ValueError):
    def __init__(self, coordinate, eigenvalue: float):
        self.coordinate = coordinate
        self.eigenvalue = eigenvalue
        super().__init__(f"metric not positive definite at {coordinate} (min eigenvalue {eigenvalue:.3e})")


class DegenerateBoundaryMetric(ConfboundError, ValueError):
    pass


class NodeEvaluationError(ConfboundError, RuntimeError):
    def __init__(self, coordinate, reason: str):
        self.coordinate = coordinate
        super().__init__(f"integrand not finite at node {coordinate}: {reason}")


class FitIllConditioned(ConfboundError, RuntimeError):
    pass


class ODEDivergence(ConfboundError, RuntimeError):
    pass


class NotConformallyCompact(ConfboundError, ValueError):
    pass


class SchemaError(ConfboundError, ValueError):
    """Model file failed validation; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
