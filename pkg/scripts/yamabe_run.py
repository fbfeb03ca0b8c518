"""Yamabe-type boundary functional estimate on the ball models for growing radial bases.

Usage: python scripts/yamabe_run.py [--max-degree 4]
"""

import argparse
import math
import time

from confbound.conformal import radial_basis, yamabe_estimate
from confbound.models import catalog

TARGET = 8 * math.sqrt(3) * math.pi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-degree", type=int, default=4)
    args = ap.parse_args()
    print(f"round value 8 sqrt(3) pi = {TARGET:.12f}")
    for name in ("hemisphere", "flat-ball", "bump(0.05,0)"):
        m = catalog(name)
        for deg in range(0, args.max_degree + 1):
            t = time.time()
            est = yamabe_estimate(m, radial_basis(m, deg))
            print(f"{name:14s} degree {deg}: start {est.start:.10f}  value {est.value:.10f}  rel {est.value / TARGET - 1:+.2e}  iters {est.iterations}  ({time.time() - t:.1f} s)")


if __name__ == "__main__":
    main()
