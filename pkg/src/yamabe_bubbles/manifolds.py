"""Closed-form geometry of the two model families.

* the unit round sphere S^n, embedded in R^{n+1};
* the product S^1(r) x S^{n-1} with its product metric.

Both are locally conformally flat.  For a centre xi we use the chart in which
``g_xi = Lambda_xi^{4/(n-2)} g`` is the Euclidean metric and xi sits at the
origin: stereographic projection from the antipode of xi on the sphere, and
``(s, omega) -> e^{s - s_xi} omega`` (shifted so that xi maps to 0) on the
product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

SPHERE = "sphere"
PRODUCT = "product"
KINDS = (SPHERE, PRODUCT)


class ChartError(ValueError):
    """Point lies outside the conformally flat chart around the centre."""


def sphere_volume(k: int) -> float:
    """Volume omega_k of the unit k-sphere in R^{k+1}."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def critical_exponent(n: int) -> float:
    return 2.0 * n / (n - 2)


def yamabe_constant_cn(n: int) -> float:
    """c_n = (n-2)/(4(n-1))."""
    return (n - 2) / (4.0 * (n - 1))


@dataclass(frozen=True)
class ModelManifold:
    kind: str
    n: int
    r: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"dimension must be an integer >= 3, got {self.n!r}")
        if self.kind == PRODUCT:
            if self.r is None or not (self.r > 0 and math.isfinite(self.r)):
                raise ValueError("product manifold needs a finite circle radius r > 0")
        elif self.r is not None:
            raise ValueError("the round sphere takes no circle radius")

    @classmethod
    def sphere(cls, n: int) -> "ModelManifold":
        return cls(SPHERE, n)

    @classmethod
    def product(cls, n: int, r: float) -> "ModelManifold":
        return cls(PRODUCT, n, float(r))

    def __str__(self) -> str:
        if self.kind == SPHERE:
            return f"S^{self.n}"
        return f"S^1({self.r:g}) x S^{self.n - 1}"


@dataclass(frozen=True)
class PointOnManifold:
    """Sphere: unit vector in R^{n+1}.  Product: circle arc-length ``s`` and
    a unit vector of R^n for the sphere factor."""
    omega: tuple[float, ...]
    s: float = 0.0

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.omega, dtype=float)


def sphere_point(n: int, theta: float) -> PointOnManifold:
    """Point of S^n at polar angle theta from the pole e_0, in the e_0 e_1 plane."""
    w = [0.0] * (n + 1)
    w[0] = math.cos(theta)
    w[1] = math.sin(theta)
    return PointOnManifold(tuple(w))


def product_point(n: int, s: float, sigma: float = 0.0) -> PointOnManifold:
    """Point of S^1(r) x S^{n-1} at arc-length s and angle sigma from e_0."""
    w = [0.0] * n
    w[0] = math.cos(sigma)
    w[1] = math.sin(sigma)
    return PointOnManifold(tuple(w), float(s))


def base_point(M: ModelManifold) -> PointOnManifold:
    return sphere_point(M.n, 0.0) if M.kind == SPHERE else product_point(M.n, 0.0, 0.0)


def _check_point(M: ModelManifold, x: PointOnManifold):
    dim = M.n + 1 if M.kind == SPHERE else M.n
    if len(x.omega) != dim:
        raise ValueError(f"point has {len(x.omega)} coordinates, {M} needs {dim}")


# ---------------------------------------------------------------------------
# curvature, volume, spectrum

def scalar_curvature(M: ModelManifold) -> float:
    n = M.n
    return float(n * (n - 1)) if M.kind == SPHERE else float((n - 1) * (n - 2))


def volume(M: ModelManifold) -> float:
    if M.kind == SPHERE:
        return sphere_volume(M.n)
    return 2.0 * math.pi * M.r * sphere_volume(M.n - 1)


def injectivity_radius(M: ModelManifold) -> float:
    if M.kind == SPHERE:
        return math.pi
    return min(math.pi * M.r, math.pi)


def default_cutoff_radius(M: ModelManifold) -> float:
    return 0.5 * injectivity_radius(M)


def chart_radius_limit(M: ModelManifold) -> float:
    """Largest flat-chart radius whose ball stays inside one chart sheet.

    On the product, the ball of flat radius rho about xi covers the circle
    range ``ln(1 - rho) < s - s_xi < ln(1 + rho)``, which must stay inside
    ``(-pi r, pi r)``.
    """
    if M.kind == SPHERE:
        return math.inf
    return -math.expm1(-math.pi * M.r)


def bubble_cutoff_radius(M: ModelManifold) -> float:
    """Cutoff radius used for bubbles: the default, shrunk if the chart needs it."""
    return min(default_cutoff_radius(M), chart_radius_limit(M))


@dataclass(frozen=True, order=True)
class SpectralValue:
    value: float
    indices: tuple[int, ...] = field(compare=True)
    multiplicity: int | None = field(default=None, compare=False)


def _product_eigenvalue(i: int, j: int, n: int, r: float) -> float:
    return i * i / (r * r) + j * (n - 2 + j)


def spectrum_below(M: ModelManifold, cutoff: float) -> list[SpectralValue]:
    """Laplace eigenvalues <= cutoff, one entry per separated class.

    Product: ``i^2/r^2 + j(n-2+j)`` over i, j >= 0 (circle modes i and -i share
    a class).  Sphere: ``j(n-1+j)``.
    """
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    n = M.n
    out: list[SpectralValue] = []
    if M.kind == SPHERE:
        j = 0
        while j * (n - 1 + j) <= cutoff:
            out.append(SpectralValue(float(j * (n - 1 + j)), (j,)))
            j += 1
    else:
        i = 0
        while i * i / (M.r * M.r) <= cutoff:
            j = 0
            while (v := _product_eigenvalue(i, j, n, M.r)) <= cutoff:
                out.append(SpectralValue(v, (i, j)))
                j += 1
            i += 1
    out.sort()
    return out


def exact_product_eigenvalue(i: int, j: int, n: int, r: Fraction) -> Fraction:
    """Rational-arithmetic eigenvalue, for checking the float generator."""
    return Fraction(i * i) / (r * r) + j * (n - 2 + j)


@dataclass(frozen=True)
class NondegeneracyVerdict:
    nondegenerate: bool
    target: float
    nearest: SpectralValue
    gap: float

    def __bool__(self) -> bool:
        return self.nondegenerate

    def describe(self) -> str:
        if self.nondegenerate:
            return f"nondegenerate (nearest eigenvalue {self.nearest.value:.12g} at {self.nearest.indices}, gap {self.gap:.3e})"
        idx = self.nearest.indices
        tag = f"i={idx[0]}" if len(idx) == 2 else f"j={idx[0]}"
        return f"degenerate ({tag})"


def is_nondegenerate_constant_solution(M: ModelManifold, tol: float = 1e-9) -> NondegeneracyVerdict:
    """Is Scal/(n-1) outside the Laplace spectrum (up to tol)?"""
    if tol <= 0:
        raise ValueError("tol must be positive")
    target = scalar_curvature(M) / (M.n - 1)
    spec = spectrum_below(M, target + 1.0 + tol)
    nearest = min(spec, key=lambda sv: (abs(sv.value - target), sv.value, sv.indices))
    gap = abs(nearest.value - target)
    return NondegeneracyVerdict(gap > tol, target, nearest, gap)


def degenerate_radii(n: int, i_max: int) -> list[float]:
    if n < 3 or i_max < 1:
        raise ValueError("need n >= 3 and i_max >= 1")
    root = math.sqrt(n - 2)
    return [i / root for i in range(1, i_max + 1)]


# ---------------------------------------------------------------------------
# distances and the flat chart

def _wrap(ds: float, r: float) -> float:
    """Representative of ds modulo 2 pi r in [-pi r, pi r)."""
    period = 2.0 * math.pi * r
    return ds - period * math.floor(ds / period + 0.5)


def _sphere_angle(u: np.ndarray, v: np.ndarray) -> float:
    # 2 atan2(|u - v|, |u + v|) is accurate over the whole range
    return 2.0 * math.atan2(float(np.linalg.norm(u - v)), float(np.linalg.norm(u + v)))


def distance(M: ModelManifold, x: PointOnManifold, y: PointOnManifold) -> float:
    _check_point(M, x)
    _check_point(M, y)
    if M.kind == SPHERE:
        return _sphere_angle(x.vector, y.vector)
    ds = _wrap(x.s - y.s, M.r)
    return math.hypot(ds, _sphere_angle(x.vector, y.vector))


def _householder_to_e0(w: np.ndarray) -> np.ndarray:
    """Orthogonal symmetric matrix H with H w = e_0."""
    e0 = np.zeros_like(w)
    e0[0] = 1.0
    v = w - e0
    nv = float(np.dot(v, v))
    if nv < 1e-30:
        return np.eye(w.size)
    return np.eye(w.size) - 2.0 * np.outer(v, v) / nv


def chart_coordinates(M: ModelManifold, xi: PointOnManifold, x: PointOnManifold) -> np.ndarray:
    """Flat-chart image of x (xi maps to the origin); an R^n vector."""
    _check_point(M, xi)
    _check_point(M, x)
    H = _householder_to_e0(xi.vector)
    z = H @ x.vector
    if M.kind == SPHERE:
        # stereographic projection from -xi, scaled so the metric is |dy|^2
        denom = 1.0 + z[0]
        if denom <= 1e-14:
            raise ChartError("antipode of the centre is outside the stereographic chart")
        return 2.0 * z[1:] / denom
    ds = _wrap(x.s - xi.s, M.r)
    if ds <= -math.pi * M.r:
        raise ChartError("point lies on the cut of the circle chart")
    y = math.exp(ds) * z
    y[0] -= 1.0
    return y


def chart_inverse(M: ModelManifold, xi: PointOnManifold, y: Sequence[float]) -> PointOnManifold:
    y = np.asarray(y, dtype=float)
    if y.size != M.n:
        raise ValueError(f"chart vectors have {M.n} components")
    H = _householder_to_e0(xi.vector)
    if M.kind == SPHERE:
        q = float(np.dot(y, y)) / 4.0
        z = np.concatenate([[(1.0 - q) / (1.0 + q)], y / (1.0 + q)])
        return PointOnManifold(tuple(H @ z))
    z = y.copy()
    z[0] += 1.0
    rad = float(np.linalg.norm(z))
    if rad == 0.0:
        raise ChartError("the chart origin shift maps to the puncture")
    ds = math.log(rad)
    if not (-math.pi * M.r < ds < math.pi * M.r):
        raise ChartError("chart vector leaves the fundamental circle domain")
    return PointOnManifold(tuple(H @ (z / rad)), xi.s + ds)


def flat_distance(M: ModelManifold, xi: PointOnManifold, x: PointOnManifold) -> float:
    """Distance from xi to x in the flat metric g_xi (the chart radius)."""
    return float(np.linalg.norm(chart_coordinates(M, xi, x)))


def conformal_factor(M: ModelManifold, xi: PointOnManifold, x: PointOnManifold) -> float:
    """Lambda_xi(x), with g_xi = Lambda_xi^{4/(n-2)} g flat near xi and Lambda_xi(xi) = 1."""
    _check_point(M, xi)
    _check_point(M, x)
    k = 0.5 * (M.n - 2)
    if M.kind == SPHERE:
        theta = _sphere_angle(xi.vector, x.vector)
        c = math.cos(0.5 * theta)
        if c <= 1e-7:
            raise ChartError("antipode of the centre is outside the stereographic chart")
        return c ** (-2.0 * k)
    ds = _wrap(x.s - xi.s, M.r)
    if ds <= -math.pi * M.r:
        raise ChartError("point lies on the cut of the circle chart")
    return math.exp(k * ds)


# radial forms used by the vectorised energy code -----------------------------

def sphere_factor_from_flat_radius(n: int, rho: np.ndarray) -> np.ndarray:
    """Lambda as a function of the stereographic radius: (1 + rho^2/4)^{(n-2)/2}."""
    return (1.0 + 0.25 * np.asarray(rho) ** 2) ** (0.5 * (n - 2))


def sphere_flat_radius(theta: np.ndarray) -> np.ndarray:
    return 2.0 * np.tan(0.5 * np.asarray(theta))
