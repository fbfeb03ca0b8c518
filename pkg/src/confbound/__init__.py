"""Curvature, boundary and conformal invariants of compact four-manifolds with boundary."""

__version__ = "0.1.0"
