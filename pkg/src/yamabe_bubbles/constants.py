"""Constants of the reduced-energy expansion.

All formulas live here so that the reduction, energy and verification code
read them from one place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .manifolds import ModelManifold, critical_exponent, sphere_volume, volume, yamabe_constant_cn
from .profiles import constant_yamabe_solution, standard_bubble_derivative
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_radial

__all__ = [
    "ExpansionCoefficients",
    "sphere_volume",
    "sphere_volume_recursive",
    "sobolev_constant",
    "sobolev_energy",
    "bubble_dirichlet_energy",
    "beta_integral",
    "beta_n",
    "h_term_factor",
    "local_coefficients",
    "reduced_coefficients",
    "WEYL_THRESHOLD_10",
]

#: u0 > (5/567) |Weyl|^2 is the ten-dimensional coercivity threshold
WEYL_THRESHOLD_10 = 5.0 / 567.0


def sphere_volume_recursive(k: int) -> float:
    """omega_k from omega_0 = 2, omega_1 = 2 pi and omega_k = 2 pi omega_{k-2}/(k-1)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    w = 2.0 if k % 2 == 0 else 2.0 * math.pi
    for j in range(k % 2 + 2, k + 1, 2):
        w *= 2.0 * math.pi / (j - 1)
    return w


def sobolev_constant(n: int) -> float:
    """Optimal constant K_n of the Sobolev inequality ||u||_{2*} <= K_n ||grad u||_2."""
    if n < 3:
        raise ValueError("n must be >= 3")
    return 1.0 / math.sqrt(n * (n - 2) * sphere_volume(n) ** (2.0 / n) / 4.0)


def sobolev_energy(n: int) -> float:
    """K_n^{-n}, the Dirichlet energy of the standard bubble."""
    return (n * (n - 2) / 4.0) ** (0.5 * n) * sphere_volume(n)


def bubble_dirichlet_energy(n: int, spec: QuadratureSpec = DEFAULT_SPEC):
    """omega_{n-1} int_0^inf U'(r)^2 r^{n-1} dr by quadrature (independent of K_n)."""
    def f(r):
        return standard_bubble_derivative(n, r) ** 2 * r ** (n - 1)
    res = integrate_radial(f, (0.0, math.inf), spec, points=(1.0,)).require()
    om = sphere_volume(n - 1)
    return om * res.value, om * res.error


def beta_integral(n: int, spec: QuadratureSpec = DEFAULT_SPEC):
    """int_0^inf r^{(n-2)/2} ln(1+r) / (1+r)^n dr, with its error estimate."""
    k = 0.5 * (n - 2)

    def f(r):
        return r ** k * np.log1p(r) / (1.0 + r) ** n
    res = integrate_radial(f, (0.0, math.inf), spec, points=(1.0,)).require()
    return res.value, res.error


@lru_cache(maxsize=None)
def beta_n(n: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    if n < 3:
        raise ValueError("n must be >= 3")
    integral, _ = beta_integral(n, spec)
    om_ratio = sphere_volume(n - 1) / sphere_volume(n)
    tail = (n - 2) ** 2 / (4.0 * n) * (1.0 - n * math.log(math.sqrt(n * (n - 2))))
    return 2.0 ** (n - 3) * (n - 2) ** 2 * om_ratio * integral + tail


def h_term_factor(n: int) -> float:
    """Coefficient multiplying c5 eps^{4/(n-2)} t^2 (h - c_n Scal) for n >= 6."""
    if n < 5:
        raise ValueError("the h-term factor is defined for n >= 5")
    return (n ** ((n - 2) / 4.0) * (n - 2) ** ((n - 6) / 4.0) * (n - 1) * sphere_volume(n)
            / (2.0 ** (n - 1) * (n - 4) * sphere_volume(n - 1)))


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Constants of the expansion

        c1 + c2 eps + c3 eps ln eps + c4 eps ln(1/t) + c5 eps t^{(n-2)/2} u0 + ...

    ``six_factor`` multiplies c5 eps^{4/(n-2)} t^2 (h - c_n Scal) for n >= 6 (it
    equals 1/2 in dimension six); ``weyl_coeff`` multiplies
    -|Weyl|^2 eps^{8/(n-2)} t^4 for n >= 7.
    """
    n: int
    omega_n: float
    omega_nm1: float
    K_n: float
    c_n: float
    beta_n: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    weyl_coeff: float
    six_factor: float
    u0: float
    volume: float

    @property
    def energy(self) -> float:
        return self.K_n ** (-self.n)

    def scaled(self, factor: float) -> "ExpansionCoefficients":
        """Same data with c4 and c5 multiplied by ``factor``."""
        return replace(self, c4=self.c4 * factor, c5=self.c5 * factor)


def local_coefficients(n: int) -> dict[str, float]:
    """The manifold-independent constants c3, c4, c5, weyl_coeff, six_factor."""
    E = sobolev_energy(n)
    om_n, om_m = sphere_volume(n), sphere_volume(n - 1)
    return {
        "c3": -E * (n - 2) / (2.0 * n),
        "c4": E * (n - 2) ** 2 / (4.0 * n),
        "c5": E * 2.0 ** n * om_m / (n * (n * (n - 2)) ** ((n - 2) / 4.0) * om_n),
        "weyl_coeff": E / (n * 24.0 * (n - 4) * (n - 6)) if n >= 7 else 0.0,
        "six_factor": h_term_factor(n) if n >= 5 else 0.0,
    }


def reduced_coefficients(M: ModelManifold, quad: QuadratureSpec = DEFAULT_SPEC,
                         u0: float | None = None, weyl: bool = False) -> ExpansionCoefficients:
    """Expansion constants for a constant background u0 on a model manifold.

    ``u0`` defaults to the constant Yamabe solution.  ``weyl=True`` asks for
    the Weyl coefficient and is rejected below dimension seven.
    """
    n = M.n
    if weyl and n < 7:
        raise ValueError(f"the Weyl coefficient enters only for n >= 7, got n={n}")
    if u0 is None:
        u0 = constant_yamabe_solution(M)
    if not u0 > 0:
        raise ValueError("u0 must be positive")
    p = critical_exponent(n)
    vol = volume(M)
    E = sobolev_energy(n)
    b = beta_n(n, quad)
    mass = u0 ** p * vol
    loc = local_coefficients(n)
    return ExpansionCoefficients(
        n=n,
        omega_n=sphere_volume(n),
        omega_nm1=sphere_volume(n - 1),
        K_n=sobolev_constant(n),
        c_n=yamabe_constant_cn(n),
        beta_n=b,
        c1=mass / n + E / n,
        c2=mass / p * (math.log(u0) - 1.0 / p) - b * E / n,
        u0=u0,
        volume=vol,
        **loc,
    )
