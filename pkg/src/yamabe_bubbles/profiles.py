"""Bubble profiles, kernel functions, the cutoff and the constant solution.

Radial quantities are written as functions of the flat-chart radius ``rho``
and accept numpy arrays.  ``U`` solves ``-Lap U = U^{2*-1}`` on R^n with the
analyst's sign (``Lap`` the usual Euclidean Laplacian), i.e. the positive
operator ``-div grad`` applied to U gives ``U^{2*-1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .manifolds import (
    SPHERE,
    ChartError,
    ModelManifold,
    PointOnManifold,
    base_point,
    bubble_cutoff_radius,
    chart_coordinates,
    conformal_factor,
    critical_exponent,
    distance,
    scalar_curvature,
    yamabe_constant_cn,
)


def bubble_exponent(n: int) -> float:
    return 0.5 * (n - 2)


def standard_bubble(n: int, x_norm):
    """U(|x|) = (sqrt(n(n-2)) / (1 + |x|^2))^{(n-2)/2}."""
    x = np.asarray(x_norm, dtype=float)
    return (math.sqrt(n * (n - 2)) / (1.0 + x * x)) ** bubble_exponent(n)


def standard_bubble_derivative(n: int, x_norm):
    """dU/d|x|."""
    x = np.asarray(x_norm, dtype=float)
    return -(n - 2) * x / (1.0 + x * x) * standard_bubble(n, x)


def scaled_bubble(n: int, delta: float, rho):
    """U_delta(rho) = delta^{(2-n)/2} U(rho/delta), written to avoid overflow."""
    rho = np.asarray(rho, dtype=float)
    k = bubble_exponent(n)
    # delta^{-k} (sqrt(n(n-2)) / (1 + rho^2/delta^2))^k = (sqrt(n(n-2)) delta / (delta^2 + rho^2))^k
    return (math.sqrt(n * (n - 2)) * delta / (delta * delta + rho * rho)) ** k


def scaled_bubble_derivative(n: int, delta: float, rho):
    rho = np.asarray(rho, dtype=float)
    return -(n - 2) * rho / (delta * delta + rho * rho) * scaled_bubble(n, delta, rho)


def scaled_bubble_second_derivative(n: int, delta: float, rho):
    rho = np.asarray(rho, dtype=float)
    k = bubble_exponent(n)
    q = delta * delta + rho * rho
    return scaled_bubble(n, delta, rho) * (4.0 * k * (k + 1.0) * rho * rho / (q * q) - 2.0 * k / q)


def kernel_functions(n: int, x) -> tuple[float, np.ndarray]:
    """(V_0, (V_1..V_n)) at a point x of R^n."""
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"expected a point of R^{n}")
    q = float(np.dot(x, x))
    denom = (1.0 + q) ** (0.5 * n)
    return (q - 1.0) / denom, x / denom


# ---------------------------------------------------------------------------
# cutoff

def _smoothstep(order: int):
    """Polynomial S on [0,1] with S(0)=0, S(1)=1 and flat ends, plus S', S''."""
    if order == 7:
        c = {4: 35.0, 5: -84.0, 6: 70.0, 7: -20.0}
    elif order == 5:
        c = {3: 10.0, 4: -15.0, 5: 6.0}
    else:
        raise ValueError("smoothstep order must be 5 or 7")

    def s(x):
        return sum(a * x ** p for p, a in c.items())

    def ds(x):
        return sum(a * p * x ** (p - 1) for p, a in c.items())

    def d2s(x):
        return sum(a * p * (p - 1) * x ** (p - 2) for p, a in c.items())
    return s, ds, d2s


@dataclass(frozen=True)
class CutoffSpec:
    """chi = 1 on [0, r0/2], 0 beyond r0, polynomial smoothstep in between."""
    r0: float
    order: int = 7

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("cutoff radius must be positive")
        _smoothstep(self.order)

    def _band(self, rho):
        rho = np.abs(np.asarray(rho, dtype=float))
        half = 0.5 * self.r0
        return np.clip((rho - half) / half, 0.0, 1.0), 1.0 / half

    def chi(self, rho):
        x, _ = self._band(rho)
        s, _, _ = _smoothstep(self.order)
        return 1.0 - s(x)

    def dchi(self, rho):
        x, scale = self._band(rho)
        _, ds, _ = _smoothstep(self.order)
        return -ds(x) * scale

    def d2chi(self, rho):
        x, scale = self._band(rho)
        _, _, d2s = _smoothstep(self.order)
        inside = (x > 0.0) & (x < 1.0)
        return np.where(inside, -d2s(x) * scale * scale, 0.0)


# ---------------------------------------------------------------------------
# bubble configuration

@dataclass(frozen=True)
class BubbleConfig:
    n: int
    t: float
    eps: float
    center: PointOnManifold
    r0: float
    cutoff_order: int = 7
    delta: float = field(init=False)

    def __post_init__(self):
        if not (self.t > 0 and self.eps > 0):
            raise ValueError("t and eps must be positive")
        delta = self.t * self.eps ** (2.0 / (self.n - 2))
        object.__setattr__(self, "delta", delta)
        if not (0.0 < delta < self.r0):
            raise ValueError(f"bubble scale delta={delta:.6g} must lie in (0, r0={self.r0:.6g})")

    @classmethod
    def on(cls, M: ModelManifold, t: float, eps: float, center: PointOnManifold | None = None,
           r0: float | None = None, cutoff_order: int = 7) -> "BubbleConfig":
        if center is None:
            center = base_point(M)
        if r0 is None:
            r0 = bubble_cutoff_radius(M)
        return cls(M.n, float(t), float(eps), center, float(r0), cutoff_order)

    @property
    def cutoff(self) -> CutoffSpec:
        return CutoffSpec(self.r0, self.cutoff_order)


def _check_cfg(M: ModelManifold, cfg: BubbleConfig):
    if cfg.n != M.n:
        raise ValueError("bubble dimension does not match the manifold")


def _chart_data(M: ModelManifold, cfg: BubbleConfig, x: PointOnManifold, conformal: bool):
    """(chart vector, radius, Lambda) for the lcf chart or the Lambda = 1 mode."""
    if conformal:
        try:
            y = chart_coordinates(M, cfg.center, x)
        except ChartError:
            return None, math.inf, 1.0
        rho = float(np.linalg.norm(y))
        if rho >= cfg.r0:
            return y, rho, 1.0
        return y, rho, conformal_factor(M, cfg.center, x)
    if M.kind != SPHERE:
        raise ValueError("the Lambda = 1 mode is only offered on the round sphere")
    return None, distance(M, cfg.center, x), 1.0


def bubble_on_manifold(M: ModelManifold, cfg: BubbleConfig, x: PointOnManifold,
                       conformal: bool = True) -> float:
    """W_{delta,xi}(x) = chi(rho) Lambda_xi(x) U_delta(rho).

    ``conformal=False`` (sphere only) uses Lambda = 1 and the round geodesic
    distance, i.e. the construction for a manifold treated as non-lcf.
    """
    _check_cfg(M, cfg)
    _, rho, lam = _chart_data(M, cfg, x, conformal)
    if rho >= cfg.r0:
        return 0.0
    return float(cfg.cutoff.chi(rho) * lam * scaled_bubble(M.n, cfg.delta, rho))


def geometric_bubble(M: ModelManifold, mu: float, center: PointOnManifold, x: PointOnManifold) -> float:
    """(sqrt(n(n-2)) mu / (mu^2 + d_g(x, center)^2))^{(n-2)/2}."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    d = distance(M, center, x)
    return float((math.sqrt(M.n * (M.n - 2)) * mu / (mu * mu + d * d)) ** bubble_exponent(M.n))


def z_functions(M: ModelManifold, cfg: BubbleConfig, x: PointOnManifold, omega: int) -> tuple[float, float]:
    """(Z_{delta,xi}(x), Z_{delta,xi,omega}(x)); omega indexes a chart axis (0-based)."""
    _check_cfg(M, cfg)
    if not 0 <= omega < M.n:
        raise ValueError(f"tangent direction index must lie in [0, {M.n})")
    y, rho, lam = _chart_data(M, cfg, x, True)
    if rho >= cfg.r0:
        return 0.0, 0.0
    n, d = M.n, cfg.delta
    common = float(cfg.cutoff.chi(rho)) * lam / (d * d + rho * rho) ** (0.5 * n)
    z0 = common * d ** (0.5 * (n - 2)) * (rho * rho - d * d)
    zw = common * d ** (0.5 * n) * float(y[omega])
    return z0, zw


def constant_yamabe_solution(M: ModelManifold) -> float:
    """u0 with c_n Scal u0 = u0^{2*-1}."""
    n = M.n
    return (yamabe_constant_cn(n) * scalar_curvature(M)) ** (1.0 / (critical_exponent(n) - 2.0))
