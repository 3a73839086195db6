#!/usr/bin/env python3
"""Sweep the decay rate and tabulate the synthesized certificates.

Shows the trade-off driving the choice of alpha: slower decay rates buy a
larger certified ellipsoid (level and projected area grow), faster ones
shrink it.
"""

import argparse
import math

from flatsat import ConstraintParams, synthesize_certificate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--alphas",
        default="0.25,0.5,0.75,1.0,1.25",
        help="comma-separated decay rates",
    )
    args = ap.parse_args()
    params = ConstraintParams()
    print(f"rho = {synthesize_certificate(params, 0.75, 1.0).rho:.4f} (alpha-independent)")
    print(f"{'alpha':>6} {'p1':>9} {'p2':>9} {'p3':>9} {'eps':>9} {'xy-area':>9}")
    for alpha in (float(a) for a in args.alphas.split(",")):
        cert = synthesize_certificate(params, alpha, 1.0)
        g = cert.gain
        area = math.pi * cert.eps / math.sqrt(g.p1 * g.p3 - g.p2 * g.p2)
        print(
            f"{alpha:6.2f} {g.p1:9.4f} {g.p2:9.4f} {g.p3:9.4f} "
            f"{cert.eps:9.4f} {area:9.2f}"
        )


if __name__ == "__main__":
    main()
