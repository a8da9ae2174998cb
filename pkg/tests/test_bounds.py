import math

import pytest
from hypothesis import given, strategies as st

import oracles
from rggent.bounds import (
    asymptotic_curve_1d,
    beta,
    beta_estimate,
    count_bound_constant,
    entropy_upper_bound,
    graph_census,
    graph_count_bound,
    log2_factorial,
    pairwise_upper_bound,
    structural_entropy_floor,
    warren_sign_pattern_bound,
)
from rggent.geometry import Domain
from rggent.graphs import CapacityError


def test_count_bound_frozen():
    # d m log2 m + d m log2(4e / d) on the cube, 4e 3^d / d on the torus
    assert graph_count_bound(5, 1) == pytest.approx(28.823115678881628)
    assert graph_count_bound(4, 2, Domain.torus(2)) == pytest.approx(60.90096033865021)


def test_count_bound_constant():
    assert count_bound_constant(1, False) == pytest.approx(math.log2(4 * math.e))
    assert count_bound_constant(2, True) == pytest.approx(math.log2(4 * math.e * 9 / 2))


def test_warren_bound():
    assert warren_sign_pattern_bound(10, 5, 2) == pytest.approx(5 * math.log2(16 * math.e))
    with pytest.raises(ValueError):
        warren_sign_pattern_bound(0, 1, 1)


def test_log2_factorial_exact():
    assert log2_factorial(0) == 0.0
    assert log2_factorial(5) == pytest.approx(math.log2(120), abs=1e-15)
    assert log2_factorial(20) == pytest.approx(math.log2(math.factorial(20)), abs=1e-12)
    assert log2_factorial(30) == pytest.approx(math.log2(math.factorial(30)), abs=1e-9)


@given(st.floats(0, 100), st.integers(1, 30))
def test_structural_floor(h, m):
    f = structural_entropy_floor(h, m)
    assert f >= 0
    assert f >= h - log2_factorial(m) - 1e-12


def test_beta_exact_and_mc():
    # rho = r - sqrt(d)/2 <= 1/2 is a full ball
    assert beta(1, 0.6) == pytest.approx(0.2)
    assert beta(2, 0.5) == 0.0
    val, sigma = beta_estimate(2, 1.3, 2_000_000, 1)
    assert abs(val - oracles.disc_in_square(1.3 - math.sqrt(2) / 2)) <= 4 * sigma
    with pytest.raises(ValueError):
        beta(1, 1.0)


def test_upper_bound_regimes():
    low = entropy_upper_bound(6, 2, 0.5)
    assert low.regime == "count"
    assert low.full_rhs_bits == pytest.approx(graph_count_bound(6, 2))
    high = entropy_upper_bound(6, 1, 0.8)
    assert high.regime == "core"
    b = high.constants["beta"]
    assert b == pytest.approx(0.6)
    m = 6
    assert high.full_rhs_bits == pytest.approx(m + (1 - b) * m * math.log2(m) + (1 - b) * m * math.log2(4 * math.e))
    assert high.leading_term_bits == pytest.approx((1 - b) * m * math.log2(m))
    two_d = entropy_upper_bound(6, 2, 1.3, mc_params={"n_samples": 200_000}, rng=1)
    assert two_d.full_rhs_bits > two_d.constants["full_rhs_without_d_bits"]
    assert set(two_d.to_record()) >= {"leading_term_bits", "full_rhs_bits", "regime", "constants"}


def test_torus_bound_uses_shifted_constant():
    rep = entropy_upper_bound(5, 2, 0.3, Domain.torus(2))
    assert rep.regime == "count"
    assert rep.constants["warren_u"] == 10 * 9


def test_pairwise_bound():
    assert pairwise_upper_bound(4, 0.5) == 6.0
    assert pairwise_upper_bound(2, 0.0) == 0.0


def test_asymptotic_curve():
    assert asymptotic_curve_1d(0.3) == 1.0
    assert asymptotic_curve_1d(0.5) == 1.0
    assert asymptotic_curve_1d(0.75) == 0.5
    with pytest.raises(ValueError):
        asymptotic_curve_1d(1.0)


@given(st.floats(0.001, 0.999))
def test_asymptotic_curve_formula(r):
    assert asymptotic_curve_1d(r) == min(1.0, 2 * (1 - r))


def test_census_small():
    c = graph_census(3, 1, 0.3, n_samples=100_000, rng=1)
    assert c.distinct_graphs == 8
    assert c.distinct_structures == 4
    assert math.log2(c.distinct_graphs) <= graph_count_bound(3, 1)
    with pytest.raises(CapacityError):
        graph_census(11, 1, 0.3, n_samples=10)
