"""CGB residual of every smooth catalog model at quadrature orders 8, 16, 32.

Usage: python scripts/convergence_table.py [--orders 8 16 32]
"""

import argparse
import math
import time

from confbound.invariants import invariants_report
from confbound.models import catalog
from confbound.quadrature import QuadratureRule

MODELS = ["flat-ball", "hemisphere", "cap(1)", "round-s4", "s2xs2", "hyperbolic-ball", "bump(0.01,0)", "even-collar(0)", "cylinder-collar", "hyperbolic-bump(0.1,0)"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", type=int, nargs="+", default=[8, 16, 32])
    args = ap.parse_args()
    print(f"{'model':26s}" + "".join(f"{'n=' + str(n):>12s}" for n in args.orders) + "   monotone")
    for name in MODELS:
        t = time.time()
        m = catalog(name)
        res = [abs(invariants_report(m, QuadratureRule(n)).cgbResidual) / (8 * math.pi**2) for n in args.orders]
        mono = all(b <= a + 1e-12 for a, b in zip(res, res[1:]))
        print(f"{name:26s}" + "".join(f"{v:12.2e}" for v in res) + f"   {'yes' if mono else 'NO'}  ({time.time() - t:.0f} s)")


if __name__ == "__main__":
    main()
