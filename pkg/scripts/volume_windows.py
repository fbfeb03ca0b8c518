"""Renormalized volume of the hyperbolic ball across eps windows, volume routes and quadrature orders.

Usage: python scripts/volume_windows.py
"""

import math
import time

from confbound.cce import renormalized_volume
from confbound.models import catalog
from confbound.quadrature import QuadratureRule

V0 = 4 * math.pi**2 / 3


def main():
    m = catalog("hyperbolic-ball")
    print(f"target V = 4 pi^2/3 = {V0:.12f}")
    print(f"{'window start':>13s} {'route':>7s} {'order':>6s} {'V':>16s} {'rel err':>10s} {'eps^-2 diag':>12s} {'fit resid':>10s}")
    for start in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        grid = tuple(start * 2.0**-k for k in range(6))
        for route in ("collar", "chart"):
            for order in (16, 24):
                t = time.time()
                v = renormalized_volume(m, grid, QuadratureRule(order), method=route)
                print(f"{start:13.0e} {route:>7s} {order:6d} {v.V:16.12f} {(v.V - V0) / V0:10.2e} {v.diagEps2:12.2e} {v.fitResidual:10.2e}  ({time.time() - t:.1f} s)")


if __name__ == "__main__":
    main()
