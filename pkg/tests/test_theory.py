import math

import numpy as np
import pytest
from scipy import integrate

from rbg_hubs.connection import ConnectionSpec, disperse
from rbg_hubs.theory import (
    constants,
    ellipse_cumulative,
    ellipse_intensity,
    expected_M,
    expected_M_disk,
    expected_M_exp,
    expected_N,
    gw_lower_bound,
    gw_min_sum,
    mean_connection_distance,
    mean_hub_degree,
    mean_typical_degree,
    pair_overlap,
    theory_table,
    unit_ball_volume,
    variance_N,
)

THETA = 0.2122
F1 = ConnectionSpec.boolean(THETA)
F2 = ConnectionSpec.exponential(THETA)


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert constants(3).c_d == pytest.approx(4.0 * math.pi / 3.0)


def test_mean_degrees():
    assert mean_typical_degree(10.0, ConnectionSpec.boolean(0.1262), 2).value == pytest.approx(0.5003, abs=1e-4)
    assert mean_typical_degree(50.0, F2, 2).value == pytest.approx(7.073, abs=1e-3)
    assert mean_typical_degree(0.0, F1, 2).value == 0.0
    assert mean_hub_degree(100.0, ConnectionSpec.boolean(0.1262), 2).value == pytest.approx(5.003, abs=1e-3)
    assert mean_typical_degree(10.0, F1, 2).method == "closed_form"
    assert mean_typical_degree(10.0, F1, 2).estimated_abs_error == 0.0


def test_expected_N_symmetry_and_family_independence():
    en = expected_N(5.0, 50.0, F1, 2).value
    assert en == pytest.approx(5.003, abs=1e-3)
    assert expected_N(50.0, 5.0, F1, 2).value == pytest.approx(en, rel=1e-14)
    assert expected_N(5.0, 50.0, F2, 2).value == pytest.approx(en, rel=1e-12)


def test_gw_bound():
    bound = gw_lower_bound(F1, 2).value
    assert bound == pytest.approx(49.97, abs=0.01)
    # the bound is the locus E N = 1
    assert expected_N(bound, 1.0, F1, 2).value == pytest.approx(1.0)
    assert gw_lower_bound(disperse(F1, 0.1), 2).value == pytest.approx(bound, rel=1e-12)
    assert gw_lower_bound(ConnectionSpec.boolean(2 * THETA), 2).value == pytest.approx(bound / 16.0)
    assert gw_min_sum(F1, 2).value == pytest.approx(2.0 * math.sqrt(bound))


def test_pair_overlap_closed_forms():
    assert pair_overlap(F1, 0.0) == pytest.approx(math.pi * THETA**2)
    assert pair_overlap(F1, 2 * THETA) == pytest.approx(0.0, abs=1e-15)
    assert pair_overlap(F1, 3 * THETA) == 0.0
    assert pair_overlap(F2, 0.0) == pytest.approx(math.pi * THETA**2 / 8.0)
    # h integrates to (int f)^2
    for spec in (F1, F2, disperse(F1, 0.3)):
        total, _ = integrate.quad(lambda s: 2 * math.pi * s * pair_overlap(spec, s), 0, 80 * THETA, limit=200)
        assert total == pytest.approx((math.pi * THETA**2) ** 2, rel=1e-6)


def test_exponential_overlap_paths_agree():
    for s in (1e-3, 0.05, THETA, 0.7, 2.0):
        closed = pair_overlap(F2, s)
        ellipse = pair_overlap(F2, s, method="ellipse")
        assert ellipse == pytest.approx(closed, rel=1e-7)
    with pytest.raises(ValueError):
        pair_overlap(F1, 0.1, method="ellipse")


def test_dispersed_overlap_rescales():
    p = 0.25
    for s in (0.0, 0.1, 0.3):
        assert pair_overlap(disperse(F2, p), s) == pytest.approx(p * pair_overlap(F2, math.sqrt(p) * s), rel=1e-12)


def test_expected_M_generic_vs_special_paths():
    for lam, mu in ((5.0, 50.0), (50.0, 5.0)):
        generic = expected_M(lam, mu, F1, 2).value
        assert generic == pytest.approx(expected_M_disk(lam, mu, THETA).value, rel=1e-8)
        generic_exp = expected_M(lam, mu, F2, 2).value
        assert generic_exp == pytest.approx(expected_M_exp(lam, mu, THETA).value, rel=1e-6)
        assert generic < expected_N(lam, mu, F1, 2).value
        assert generic_exp < expected_N(lam, mu, F2, 2).value


def test_quadrature_values_carry_errors():
    value = expected_M_disk(5.0, 50.0, THETA)
    assert value.method == "quadrature"
    assert value.estimated_abs_error > 0.0
    assert 0.0 < value.value < expected_N(5.0, 50.0, F1, 2).value


def test_expected_M_limits():
    assert expected_M(0.0, 50.0, F1, 2).value == 0.0
    # large hub density: every agent within 2 theta is reached
    assert expected_M_disk(5.0, 1e6, THETA).value == pytest.approx(4 * 5.0 * math.pi * THETA**2, rel=2e-3)
    assert expected_M_disk(5.0, 50.0, 1e-6).value == pytest.approx(0.0, abs=1e-12)
    # small mu: E M is linear in mu
    small, smaller = expected_M(5.0, 1e-4, F1, 2).value, expected_M(5.0, 1e-5, F1, 2).value
    assert abs(small - 10.0 * smaller) / small <= 0.01
    # lambda / mu -> infinity at fixed lambda * mu
    assert expected_M(25000.0, 0.01, F1, 2).value == pytest.approx(expected_N(25000.0, 0.01, F1, 2).value, rel=0.01)


def test_small_v_behaviour_of_exponential_integrand():
    from scipy import special

    v = 1e-8
    assert v * special.k1(v / THETA) == pytest.approx(THETA, rel=1e-6)


@pytest.mark.parametrize("spec", [F1, F2])
def test_expected_M_decreases_with_dispersion(spec):
    values = [expected_M(5.0, 50.0, disperse(spec, p), 2).value for p in (1.0, 0.5, 0.25, 0.1, 0.01)]
    assert all(a < b for a, b in zip(values, values[1:]))
    en = expected_N(5.0, 50.0, spec, 2).value
    assert abs(values[-1] - en) / en <= 0.05


@pytest.mark.parametrize("spec", [F1, F2])
def test_dispersion_equals_density_rescaling(spec):
    lam, mu, p = 5.0, 50.0, 0.25
    left = expected_M(lam, mu, disperse(spec, p), 2).value
    right = expected_M(lam / p, mu * p, spec, 2).value
    assert left == pytest.approx(right, rel=1e-9)


def test_expected_M_grows_with_lambda_over_mu():
    values = [expected_M(lam, 250.0 / lam, F1, 2).value for lam in (5.0, 15.8, 50.0, 158.0)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_variance_N():
    a = variance_N(5.0, 50.0, F1, 2).value
    b = variance_N(50.0, 5.0, F1, 2).value
    assert a >= expected_N(5.0, 50.0, F1, 2).value
    assert b >= expected_N(50.0, 5.0, F1, 2).value
    assert b > a
    assert variance_N(5.0, 50.0, F2, 2).value > expected_N(5.0, 50.0, F2, 2).value
    with pytest.raises(ValueError):
        variance_N(5.0, 50.0, F1.in_dimension(3), 3)


def test_ellipse_intensity_and_cumulative():
    mu, x = 3.0, 0.4
    assert ellipse_cumulative(mu, x, x) == 0.0
    # at x -> 0 the intensity is that of {2|y|}
    assert ellipse_intensity(mu, 1e-9, 0.8) == pytest.approx(mu * math.pi * 0.8 / 2.0, rel=1e-9)
    r, h = 1.1, 1e-6
    derivative = (ellipse_cumulative(mu, x, r + h) - ellipse_cumulative(mu, x, r - h)) / (2 * h)
    assert ellipse_intensity(mu, x, r) == pytest.approx(derivative, rel=1e-6)
    with pytest.raises(ValueError):
        ellipse_intensity(mu, x, x)
    with pytest.raises(ValueError):
        ellipse_cumulative(mu, x, 0.1)
    assert np.allclose(ellipse_cumulative(mu, 0.0, np.array([0.0, 1.0])), [0.0, mu * math.pi / 4])


def test_mean_connection_distance():
    base = mean_connection_distance(10.0, F1).value
    assert base == pytest.approx(10.0 * 2 * math.pi * THETA**3 / 3)
    assert mean_connection_distance(10.0, disperse(F1, 0.25)).value / base == pytest.approx(2.0, rel=1e-12)


def test_theory_table_rows():
    rows = {v.quantity: v for v in theory_table(5.0, 50.0, F2, 2)}
    assert {"expected_N", "expected_M", "expected_M_exp", "variance_N", "gw_lower_bound"} <= rows.keys()
    assert rows["expected_M"].value == pytest.approx(rows["expected_M_exp"].value, rel=1e-6)
    dispersed = {v.quantity: v for v in theory_table(5.0, 50.0, disperse(F1, 0.5), 2)}
    assert dispersed["expected_M"].value == pytest.approx(dispersed["expected_M_disk"].value, rel=1e-8)
    three_d = {v.quantity for v in theory_table(5.0, 50.0, F1, 3)}
    assert "expected_M" not in three_d and "expected_N" in three_d
