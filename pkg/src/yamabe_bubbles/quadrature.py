"""Deterministic adaptive quadrature.

Everything here is built on one nested rule, the 10-point Gauss / 21-point
Kronrod pair, applied with a globally adaptive bisection loop.  The loop is
batched (many intervals are refined per round and evaluated in a single
vectorised call) but its decisions depend only on the interval data, and the
final sum is taken with ``math.fsum`` in left-endpoint order, so identical
inputs always give bit-identical outputs.

Manifold integrals are reduced to one or two dimensions using the symmetry of
the integrand: zonal fields on the round sphere, and fields on
S^1(r) x S^{n-1} that depend only on the circle coordinate and the polar angle
on the sphere factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .manifolds import ModelManifold, scalar_curvature, sphere_volume, yamabe_constant_cn

# Kronrod abscissae on [0, 1) in decreasing order (QUADPACK qk21); the
# odd-indexed entries 1, 3, ..., 9 are the 10-point Gauss nodes.
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# full 21-point tables on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]

#: polynomial degree integrated exactly by the Kronrod rule
KRONROD_DEGREE = 31
GAUSS_DEGREE = 19

_EPS = np.finfo(float).eps


class QuadratureToleranceError(ArithmeticError):
    """Adaptive refinement ran out of depth before meeting the tolerance."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_depth: int = 40
    base_rule: str = "gk21"
    max_intervals: int = 50_000
    # every initial interval is cut into 2**min_splits equal pieces first
    min_splits: int = 0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.base_rule != "gk21":
            raise ValueError(f"unknown base rule {self.base_rule!r}")

    def tightened(self, factor: float = 1e-2) -> "QuadratureSpec":
        return replace(self, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor,
                       max_depth=self.max_depth + 6, max_intervals=self.max_intervals * 4)

    def halved(self) -> "QuadratureSpec":
        """Same policy with every starting interval bisected once more."""
        return replace(self, min_splits=self.min_splits + 1, max_depth=self.max_depth + 1)


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    converged: bool
    n_intervals: int

    def require(self) -> "QuadResult":
        if not self.converged:
            raise QuadratureToleranceError("quadrature did not converge", self.value, self.error)
        return self

    def __float__(self) -> float:
        return self.value


def gk21(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray):
    """Apply the G10/K21 pair to every interval ``[a[i], b[i]]`` at once.

    Returns ``(kronrod, gauss, abs_kronrod)`` arrays.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    kron = half * (fx @ KRONROD_WEIGHTS)
    gauss = half * (fx @ GAUSS_WEIGHTS)
    absk = np.abs(half) * (np.abs(fx) @ KRONROD_WEIGHTS)
    return kron, gauss, absk


def _error_estimate(kron, gauss, absk):
    # |K - G| is the error of the 10-point rule and so over-estimates the
    # Kronrod error; the floor accounts for cancellation in the node sum.
    return np.maximum(np.abs(kron - gauss), 50.0 * _EPS * absk)


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              spec: QuadratureSpec = DEFAULT_SPEC, points: Sequence[float] = ()) -> QuadResult:
    """Adaptive integral of a vectorised ``f`` over ``[a, b]``.

    ``b`` may be ``inf``; the tail is then mapped onto a finite interval with
    ``x = a + u / (1 - u)``.  ``points`` are forced breakpoints (known peaks,
    kinks, scale changes).
    """
    if b == math.inf:
        def g(u):
            one_minus = 1.0 - u
            return f(a + u / one_minus) / (one_minus * one_minus)
        mapped = [(p - a) / (1.0 + p - a) for p in points if a < p < math.inf]
        return integrate(g, 0.0, 1.0, spec, mapped)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("only [a, b] and [a, inf) domains are supported")
    if a == b:
        return QuadResult(0.0, 0.0, True, 0)
    if b < a:
        r = integrate(f, b, a, spec, points)
        return QuadResult(-r.value, r.error, r.converged, r.n_intervals)

    edges = np.array(sorted({a, b, *[p for p in points if a < p < b]}))
    if spec.min_splits:
        m = 2 ** spec.min_splits
        frac = np.arange(m + 1) / m
        edges = np.unique(np.concatenate(
            [lo_ + (hi_ - lo_) * frac for lo_, hi_ in zip(edges[:-1], edges[1:])]))
    lo = edges[:-1].copy()
    hi = edges[1:].copy()
    depth = np.zeros(lo.size, dtype=int)
    kron, gauss, absk = gk21(f, lo, hi)
    err = _error_estimate(kron, gauss, absk)

    while True:
        total = math.fsum(kron)
        tol = max(spec.rel_tol * abs(total), spec.abs_tol)
        toterr = float(np.sum(err))
        if toterr <= tol:
            converged = True
            break
        order = np.argsort(-err, kind="stable")
        # refine the largest contributors until what is left fits in tol/2
        tail = np.cumsum(err[order][::-1])[::-1]
        keep_from = np.searchsorted(-tail, -0.5 * tol, side="left")
        pick = order[:max(int(keep_from), 1)]
        pick = pick[depth[pick] < spec.max_depth]
        if pick.size == 0 or lo.size + pick.size > spec.max_intervals:
            converged = False
            break
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        k2, g2, a2 = gk21(f, new_lo, new_hi)
        e2 = _error_estimate(k2, g2, a2)
        d2 = np.concatenate([depth[pick], depth[pick]]) + 1
        keep = np.ones(lo.size, dtype=bool)
        keep[pick] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        depth = np.concatenate([depth[keep], d2])
        kron = np.concatenate([kron[keep], k2])
        gauss = np.concatenate([gauss[keep], g2])
        err = np.concatenate([err[keep], e2])
        # canonical order so the result never depends on refinement history
        srt = np.argsort(lo, kind="stable")
        lo, hi, depth, kron, gauss, err = lo[srt], hi[srt], depth[srt], kron[srt], gauss[srt], err[srt]

    return QuadResult(math.fsum(kron), float(np.sum(err)), converged, int(lo.size))


def integrate_radial(f: Callable[[np.ndarray], np.ndarray], domain: tuple[float, float] = (0.0, math.inf),
                     spec: QuadratureSpec = DEFAULT_SPEC, points: Sequence[float] = ()) -> QuadResult:
    """One-dimensional integral over ``domain`` (``(a, inf)`` allowed)."""
    a, b = domain
    return integrate(f, float(a), float(b), spec, points)


def gauss_legendre(m: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Fixed m-point Gauss-Legendre rule on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def polar_angle_rule(k: int, m: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for ``int_{S^k} F(angle to a fixed axis) dv``.

    The weights already contain ``omega_{k-1} sin^{k-1}``; two Gauss panels
    split at pi/2 keep both poles well resolved.
    """
    x1, w1 = gauss_legendre(m // 2, 0.0, 0.5 * math.pi)
    x2, w2 = gauss_legendre(m - m // 2, 0.5 * math.pi, math.pi)
    x = np.concatenate([x1, x2])
    w = np.concatenate([w1, w2]) * sphere_volume(k - 1) * np.sin(x) ** (k - 1)
    return x, w


def graded_angle_rule(k: int, per_panel: int = 16, levels: int = 7) -> tuple[np.ndarray, np.ndarray]:
    """Like :func:`polar_angle_rule` but with panels shrinking geometrically towards pi.

    Integrands of the form F(|e_0 + y|) with |y| close to 1 are nearly
    singular at the angle pi; halving the panels towards that end keeps a
    fixed node count accurate.
    """
    edges = [0.0] + [math.pi - math.pi / 2 ** j for j in range(1, levels + 1)] + [math.pi]
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(per_panel, a, b)
        xs.append(x)
        ws.append(w)
    x = np.concatenate(xs)
    w = np.concatenate(ws) * sphere_volume(k - 1) * np.sin(x) ** (k - 1)
    return x, w


# ---------------------------------------------------------------------------
# fields on the model manifolds

SYMMETRIES = ("zonal", "product", "general")


@dataclass(frozen=True)
class FieldOnManifold:
    """A scalar field given through its symmetry-reduced coordinates.

    ``zonal``: ``value(theta)`` with theta the angle from the pole of a round
    sphere; ``grad(theta)`` returns d/dtheta.
    ``product``: ``value(s, sigma)`` on S^1(r) x S^{n-1}, with s the circle
    arc-length and sigma the angle on the sphere factor; ``grad`` returns the
    pair (d/ds, d/dsigma), which is orthonormal for the product metric.
    """
    value: Callable
    symmetry: str = "zonal"
    grad: Callable | None = None
    points: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"symmetry must be one of {SYMMETRIES}")


class UnsupportedSymmetryError(ValueError):
    pass


def _check_field(M: ModelManifold, f: FieldOnManifold):
    expected = "zonal" if M.kind == "sphere" else "product"
    if f.symmetry != expected:
        raise UnsupportedSymmetryError(
            f"{M.kind} manifolds integrate only {expected!r} fields, got {f.symmetry!r}")


def _manifold_integral(M: ModelManifold, pointwise, points, spec, sigma_nodes: int = 64) -> QuadResult:
    n = M.n
    if M.kind == "sphere":
        om = sphere_volume(n - 1)
        return integrate(lambda th: om * pointwise(th) * np.sin(th) ** (n - 1), 0.0, math.pi, spec, points)
    sig, wsig = polar_angle_rule(n - 1, sigma_nodes)
    half = math.pi * M.r

    def outer(s):
        vals = pointwise(s[:, None], sig[None, :])
        return np.asarray(vals, dtype=float).reshape(s.size, sig.size) @ wsig
    return integrate(outer, -half, half, spec, points)


def integrate_manifold(M: ModelManifold, f: FieldOnManifold, spec: QuadratureSpec = DEFAULT_SPEC) -> QuadResult:
    _check_field(M, f)
    return _manifold_integral(M, f.value, f.points, spec)


def lp_norm(M: ModelManifold, f: FieldOnManifold, p: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    if p < 1:
        raise ValueError("lp_norm requires p >= 1")
    _check_field(M, f)
    r = _manifold_integral(M, lambda *c: np.abs(f.value(*c)) ** p, f.points, spec).require()
    return r.value ** (1.0 / p)


def h_inner_product(M: ModelManifold, u: FieldOnManifold, v: FieldOnManifold,
                    h_mode: str | float = "geometric", spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """<u, v>_h = int <grad u, grad v> + int h u v, h = c_n Scal in geometric mode."""
    _check_field(M, u)
    _check_field(M, v)
    if u.grad is None or v.grad is None:
        raise ValueError("h_inner_product needs analytic gradients for both fields")
    h = yamabe_constant_cn(M.n) * scalar_curvature(M) if h_mode == "geometric" else float(h_mode)

    if M.kind == "sphere":
        def integrand(th):
            return u.grad(th) * v.grad(th) + h * u.value(th) * v.value(th)
    else:
        def integrand(s, sig):
            us, usig = u.grad(s, sig)
            vs, vsig = v.grad(s, sig)
            return us * vs + usig * vsig + h * u.value(s, sig) * v.value(s, sig)
    pts = tuple(sorted(set(u.points) | set(v.points)))
    return _manifold_integral(M, integrand, pts, spec).require().value
