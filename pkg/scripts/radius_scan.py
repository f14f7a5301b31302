"""Scan the product radius and report where the constant solution degenerates.

    python3 scripts/radius_scan.py --n 6 --r-max 2.5 --steps 500
"""
import argparse

import numpy as np

from yamabe_bubbles.manifolds import ModelManifold, degenerate_radii, is_nondegenerate_constant_solution


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--r-max", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=400)
    a = p.parse_args()
    predicted = [r for r in degenerate_radii(a.n, 64) if r <= a.r_max]
    grid = sorted(set(np.linspace(a.r_max / a.steps, a.r_max, a.steps).tolist()) | set(predicted))
    print("r,verdict")
    flagged = []
    for r in grid:
        v = is_nondegenerate_constant_solution(ModelManifold.product(a.n, r))
        print(f"{r:.17g},{v.describe()}")
        if not v.nondegenerate:
            flagged.append(r)
    match = len(flagged) == len(predicted) and np.allclose(flagged, predicted, rtol=1e-12)
    print(f"# flagged {len(flagged)} radii; i/sqrt(n-2) predicts {len(predicted)}; match={match}")


if __name__ == "__main__":
    main()
