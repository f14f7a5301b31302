"""Residual rates against the predicted exponents for a range of dimensions.

    python3 scripts/residual_rates.py --n 3-9 --r 0.7
    python3 scripts/residual_rates.py --sphere --non-conformal --n 7-9
"""
import argparse

from yamabe_bubbles.manifolds import ModelManifold, scalar_curvature, yamabe_constant_cn
from yamabe_bubbles.verify import RATE_TOL, fit_rate, residual_rate_target, residual_sweep


def dims(text):
    lo, _, hi = text.partition("-")
    return range(int(lo), int(hi or lo) + 1)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=dims, default=dims("3-9"))
    p.add_argument("--r", type=float, default=0.7)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--sphere", action="store_true", help="round sphere instead of the product")
    p.add_argument("--non-conformal", action="store_true", help="Lambda = 1 mode (sphere only)")
    p.add_argument("--cutoff-order", type=int, default=7)
    a = p.parse_args()
    conformal = not a.non_conformal
    print("n,manifold,model,target,slope,within_tol")
    for n in a.n:
        M = ModelManifold.sphere(n) if a.sphere else ModelManifold.product(n, a.r)
        h = None if conformal else yamabe_constant_cn(n) * scalar_curvature(M)
        target, model, q = residual_rate_target(n, conformal)
        pts = residual_sweep(M, a.t, h=h, conformal=conformal, cutoff_order=a.cutoff_order)
        slope = fit_rate([(pt.eps, pt.value) for pt in pts], model, q).slope
        print(f"{n},{M},{model},{target:.6f},{slope:.6f},{abs(slope - target) <= RATE_TOL}")


if __name__ == "__main__":
    main()
