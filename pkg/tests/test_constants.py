import math

import numpy as np
import pytest

from yamabe_bubbles import constants as C
from yamabe_bubbles.manifolds import ModelManifold, critical_exponent, volume
from yamabe_bubbles.profiles import constant_yamabe_solution
from yamabe_bubbles.quadrature import DEFAULT_SPEC

# Integral part of beta_n and beta_n itself, evaluated once with mpmath at 30 digits
# (tanh-sinh on [0, 1, inf]) and frozen here.
BETA_INTEGRAL = {
    3: 0.34804698172653846, 4: 0.13888888888888889, 5: 0.059122885922183395, 6: 0.026111111111111111,
    7: 0.01180594097115966, 8: 0.0054251700680272109, 9: 0.0025226284629143928, 10: 0.0011835474930713026,
}
BETA = {
    3: 0.16758038752979228, 4: 0.043612562493415369, 5: -0.78989416372023243, 6: -2.5561076606958912,
    7: -5.4074324589646252, 8: -9.4596902633712235, 9: -14.806399830985033, 10: -21.526054347232323,
}


def test_sphere_volume_examples():
    assert C.sphere_volume(1) == pytest.approx(2 * math.pi, rel=1e-15)
    assert C.sphere_volume(2) == pytest.approx(4 * math.pi, rel=1e-15)
    assert C.sphere_volume(3) == pytest.approx(2 * math.pi ** 2, rel=1e-15)


@pytest.mark.parametrize("k", range(0, 13))
def test_sphere_volume_recursion(k):
    assert C.sphere_volume_recursive(k) == pytest.approx(C.sphere_volume(k), rel=1e-12)


def test_sobolev_constant():
    assert C.sobolev_constant(4) ** -2 == pytest.approx(2 * math.sqrt(8 * math.pi ** 2 / 3), rel=1e-14)
    for n in range(3, 11):
        K = C.sobolev_constant(n)
        assert K > 0
        assert K ** -n == pytest.approx(C.sobolev_energy(n), rel=1e-13)
    with pytest.raises(ValueError):
        C.sobolev_constant(2)


@pytest.mark.parametrize("n", range(3, 11))
def test_dirichlet_energy_matches_sobolev(n):
    val, err = C.bubble_dirichlet_energy(n)
    assert abs(val - C.sobolev_energy(n)) / C.sobolev_energy(n) <= 1e-6
    assert err >= 0


@pytest.mark.parametrize("n", range(3, 11))
def test_beta_against_frozen_oracle(n):
    integral, _ = C.beta_integral(n)
    assert integral == pytest.approx(BETA_INTEGRAL[n], rel=1e-10)
    assert C.beta_n(n) == pytest.approx(BETA[n], abs=1e-10)


def test_beta_closed_forms_even_n():
    # the integrand is rational in r times log(1+r) for even n
    assert C.beta_integral(4)[0] == pytest.approx(5 / 36, rel=1e-12)
    assert C.beta_integral(6)[0] == pytest.approx(47 / 1800, rel=1e-12)


@pytest.mark.parametrize("n", range(3, 11))
def test_beta_refinement_stability(n):
    assert abs(C.beta_n(n, DEFAULT_SPEC) - C.beta_n(n, DEFAULT_SPEC.halved())) <= 1e-8


@pytest.mark.parametrize("n", range(3, 11))
def test_beta_tail_summand(n):
    a = math.sqrt(n * (n - 2))
    lhs = (n - 2) ** 2 / (4 * n) * (1 - n * math.log(a))
    rhs = (n - 2) ** 2 / (4 * n) - (n - 2) ** 2 / 4 * math.log(a)
    assert lhs == pytest.approx(rhs, rel=1e-14)


@pytest.mark.parametrize("n", range(3, 11))
def test_coefficient_signs(n):
    loc = C.local_coefficients(n)
    assert loc["c3"] < 0 < loc["c4"] and loc["c5"] > 0


@pytest.mark.parametrize("n", range(6, 11))
def test_c5_h_factor_identity(n):
    lhs = C.local_coefficients(n)["c5"] * C.h_term_factor(n)
    rhs = C.sobolev_energy(n) * 2 * (n - 1) / (n * (n - 2) * (n - 4))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_six_factor_is_half():
    assert C.h_term_factor(6) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        C.h_term_factor(4)


def test_weyl_ratio_dimension_ten():
    loc = C.local_coefficients(10)
    assert loc["weyl_coeff"] / loc["c5"] == pytest.approx(5 / 567, rel=1e-12)
    # independent evaluation: c5/K^-n = 2^10 omega_9 / (10 * 80^2 * omega_10), weyl/K^-n = 1/(10*576)
    om9, om10 = C.sphere_volume(9), C.sphere_volume(10)
    assert (1 / 576) / (2 ** 10 * om9 / (80 ** 2 * om10)) == pytest.approx(5 / 567, rel=1e-12)
    assert C.WEYL_THRESHOLD_10 == 5 / 567


def test_reduced_coefficients_formulas():
    M = ModelManifold.product(5, 0.6)
    co = C.reduced_coefficients(M)
    n = 5
    p = critical_exponent(n)
    u0 = constant_yamabe_solution(M)
    E = C.sobolev_energy(n)
    assert co.c1 == pytest.approx(u0 ** p * volume(M) / n + E / n, rel=1e-14)
    assert co.c2 == pytest.approx(u0 ** p * volume(M) / p * (math.log(u0) - 1 / p) - co.beta_n * E / n, rel=1e-13)
    assert co.weyl_coeff == 0.0
    assert co.energy == pytest.approx(E, rel=1e-13)
    assert co.u0 == u0 and co.volume == volume(M)


def test_weyl_request_gated_by_dimension():
    for n in (4, 5, 6):
        with pytest.raises(ValueError):
            C.reduced_coefficients(ModelManifold.sphere(n), weyl=True)
    assert C.reduced_coefficients(ModelManifold.sphere(7), weyl=True).weyl_coeff > 0


def test_scaled_keeps_other_fields():
    co = C.reduced_coefficients(ModelManifold.sphere(4))
    s = co.scaled(3.0)
    assert s.c4 == 3 * co.c4 and s.c5 == 3 * co.c5 and s.c1 == co.c1
