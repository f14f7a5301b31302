"""Expansion remainder |J_eps(u0 - W) - closed form| over eps, with fitted slopes.

    python3 scripts/expansion_sweep.py --kind product --n 5 --t 0.5,1,2
"""
import argparse
import math
import sys

from yamabe_bubbles.config import parse_grid
from yamabe_bubbles.manifolds import ModelManifold
from yamabe_bubbles.verify import DEFAULT_EPS_GRID, EXPANSION_SLOPE_MIN, expansion_remainder_sweep, fit_rate


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--kind", choices=("sphere", "product"), default="sphere")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--r", type=float, help="product radius (default 0.7/sqrt(n-2))")
    p.add_argument("--t", type=parse_grid, default=(0.5, 1.0, 2.0))
    p.add_argument("--eps", type=parse_grid, default=DEFAULT_EPS_GRID)
    p.add_argument("--cutoff-order", type=int, default=7)
    a = p.parse_args()
    if a.kind == "sphere":
        M = ModelManifold.sphere(a.n)
    else:
        M = ModelManifold.product(a.n, a.r if a.r is not None else 0.7 / math.sqrt(a.n - 2))
    print("epsilon,t,value,error_estimate")
    for t in a.t:
        pts, dropped = expansion_remainder_sweep(M, t, a.eps, a.cutoff_order)
        for pt in pts:
            print(f"{pt.eps:.17g},{t:.17g},{pt.value:.17g},{pt.error:.17g}")
        slope = fit_rate([(pt.eps, pt.value) for pt in pts]).slope
        verdict = "ok" if slope >= EXPANSION_SLOPE_MIN else "below 1.2"
        note = f", {len(dropped)} eps dropped (delta >= r0)" if dropped else ""
        print(f"# {M} t={t:g}: slope {slope:.4f} ({verdict}{note})", file=sys.stderr)


if __name__ == "__main__":
    main()
