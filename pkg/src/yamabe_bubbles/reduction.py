"""Closed-form reduced energies, their leading functionals and blow-up prediction.

Every regime shares the shape

    G(t, xi) = c4 ln(1/t) + c5 Phi(xi) t^k

with a regime-dependent power k and weight Phi.  When Phi > 0 the function
is coercive in t and has the unique minimiser t* = (c4 / (k c5 Phi))^{1/k}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .constants import WEYL_THRESHOLD_10, ExpansionCoefficients
from .manifolds import ModelManifold, scalar_curvature, yamabe_constant_cn
from .profiles import constant_yamabe_solution

GENERIC36 = "Generic36"
GEOMETRIC39 = "Geometric39"
LCF_ALL_DIM = "LCFAllDim"
DIM10_WEYL = "Dim10Weyl"
DIM6_POSITIVE = "Dim6Positive"
REGIMES = (GENERIC36, GEOMETRIC39, LCF_ALL_DIM, DIM10_WEYL, DIM6_POSITIVE)

FLAT_TOL = 1e-12


@dataclass(frozen=True)
class PointwiseData:
    """u0(xi), h(xi), Scal(xi) and |Weyl(xi)|^2 at one point."""
    u0: float
    h: float
    scal: float
    weyl2: float = 0.0

    def __post_init__(self):
        if not self.u0 > 0:
            raise ValueError("u0 must be positive")
        if self.weyl2 < 0:
            raise ValueError("weyl2 must be nonnegative")

    @classmethod
    def geometric(cls, M: ModelManifold, u0: float | None = None, weyl2: float = 0.0) -> "PointwiseData":
        """Data of the constant Yamabe solution with h = c_n Scal."""
        scal = scalar_curvature(M)
        return cls(constant_yamabe_solution(M) if u0 is None else u0,
                   yamabe_constant_cn(M.n) * scal, scal, weyl2)


def check_regime(n: int, regime: str, data: PointwiseData | None = None) -> None:
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    if n < 3:
        raise ValueError("n must be >= 3")
    if regime == GENERIC36 and not 3 <= n <= 6:
        raise ValueError(f"{GENERIC36} needs 3 <= n <= 6, got n={n}")
    if regime == GEOMETRIC39 and not 3 <= n <= 9:
        raise ValueError(f"{GEOMETRIC39} needs 3 <= n <= 9, got n={n}")
    if regime == DIM10_WEYL and n != 10:
        raise ValueError(f"{DIM10_WEYL} needs n = 10, got n={n}")
    if regime == DIM6_POSITIVE and n != 6:
        raise ValueError(f"{DIM6_POSITIVE} needs n = 6, got n={n}")
    if regime == LCF_ALL_DIM and data is not None and data.weyl2 != 0.0:
        raise ValueError(f"{LCF_ALL_DIM} describes conformally flat metrics: weyl2 must be 0")


def power_of_t(n: int, regime: str) -> float:
    if regime == DIM10_WEYL:
        return 4.0
    if regime == DIM6_POSITIVE:
        return 2.0
    return 0.5 * (n - 2)


def phi_field(regime: str, data: PointwiseData, n: int) -> float:
    """The weight Phi(xi) whose positive strict local minima attract blow-up."""
    check_regime(n, regime, data)
    cn = yamabe_constant_cn(n)
    if regime == DIM10_WEYL:
        return data.u0 - WEYL_THRESHOLD_10 * data.weyl2
    if regime == DIM6_POSITIVE:
        return 0.5 * (data.h - cn * data.scal) - data.u0
    return data.u0 + (0.5 * (data.h - cn * data.scal) if n == 6 else 0.0)


def reduced_expansion(n: int, coeffs: ExpansionCoefficients, data: PointwiseData, t: float, eps: float,
                      regime: str) -> float:
    """Closed-form reduced energy through order eps (plus the Weyl term for n >= 7)."""
    check_regime(n, regime, data)
    if not (t > 0 and eps > 0):
        raise ValueError("t and eps must be positive")
    c = coeffs
    base = c.c1 + c.c2 * eps + c.c3 * eps * math.log(eps) + c.c4 * eps * math.log(1.0 / t)
    if regime == DIM6_POSITIVE:
        return base + c.c5 * eps * t * t * phi_field(regime, data, n)
    cn = yamabe_constant_cn(n)
    bubble = eps * t ** (0.5 * (n - 2)) * data.u0
    if n >= 6:
        bubble += c.six_factor * eps ** (4.0 / (n - 2)) * t * t * (data.h - cn * data.scal)
    out = base + c.c5 * bubble
    if n >= 7:
        out -= c.weyl_coeff * data.weyl2 * eps ** (8.0 / (n - 2)) * t ** 4
    return out


def g_functional(n: int, coeffs: ExpansionCoefficients, data: PointwiseData, t: float, regime: str) -> float:
    """G(t, xi) = c4 ln(1/t) + c5 Phi(xi) t^k."""
    if not t > 0:
        raise ValueError("t must be positive")
    k = power_of_t(n, regime)
    return coeffs.c4 * math.log(1.0 / t) + coeffs.c5 * phi_field(regime, data, n) * t ** k


def is_coercive(n: int, data: PointwiseData, regime: str) -> bool:
    return phi_field(regime, data, n) > 0.0


def t_star(n: int, coeffs: ExpansionCoefficients, data: PointwiseData, regime: str) -> float | None:
    """Unique minimiser of G in t, or None when Phi <= 0 (no interior minimum)."""
    phi = phi_field(regime, data, n)
    if phi <= 0.0:
        return None
    k = power_of_t(n, regime)
    return (coeffs.c4 / (k * coeffs.c5 * phi)) ** (1.0 / k)


def g_minimum(n: int, coeffs: ExpansionCoefficients, data: PointwiseData, regime: str) -> float | None:
    """G(t*, xi) = c4 (ln(1/t*) + 1/k)."""
    ts = t_star(n, coeffs, data, regime)
    if ts is None:
        return None
    return coeffs.c4 * (math.log(1.0 / ts) + 1.0 / power_of_t(n, regime))


@dataclass(frozen=True)
class BlowupPrediction:
    certified: bool
    index: int | None
    xi: Any
    t_star: float | None
    phi: tuple[float, ...]
    g_min: tuple[float | None, ...]
    flat: bool
    strict_local_min: bool
    xi_refined: float | None
    reason: str = ""


def predict_blowup_point(grid: Sequence[tuple[Any, PointwiseData]], n: int, coeffs: ExpansionCoefficients,
                         regime: str) -> BlowupPrediction:
    """Grid argmin of G(t*(xi), xi) over the samples where Phi > 0.

    ``grid`` holds (xi, data) pairs in order; neighbours in the list are
    neighbours on the grid.  Ties go to the lowest index.  For scalar xi an
    interior minimum is refined by the vertex of the parabola through it and
    its two neighbours.
    """
    if not grid:
        raise ValueError("empty grid")
    phis = tuple(phi_field(regime, d, n) for _, d in grid)
    gmins = tuple(g_minimum(n, coeffs, d, regime) for _, d in grid)
    admissible = [i for i, g in enumerate(gmins) if g is not None]
    flat = max(phis) - min(phis) <= FLAT_TOL
    if not admissible:
        return BlowupPrediction(False, None, None, None, phis, gmins, flat, False, None,
                                "Phi <= 0 on the whole grid: no blow-up certificate")
    best = min(admissible, key=lambda i: (gmins[i], i))
    xi, data = grid[best]
    nb = [j for j in (best - 1, best + 1) if 0 <= j < len(grid)]
    strict = (not flat) and len(nb) == 2 and all(phis[j] > phis[best] for j in nb)
    refined = None
    if strict and all(isinstance(grid[j][0], (int, float)) for j in (best - 1, best, best + 1)):
        x = np.array([grid[j][0] for j in (best - 1, best, best + 1)], dtype=float)
        y = np.array([phis[j] for j in (best - 1, best, best + 1)])
        a, b, _ = np.polyfit(x, y, 2)
        if a > 0:
            refined = float(-b / (2.0 * a))
    reason = "flat landscape: every sample is a minimiser" if flat else ""
    return BlowupPrediction(True, best, xi, t_star(n, coeffs, data, regime), phis, gmins, flat, strict,
                            refined, reason)
