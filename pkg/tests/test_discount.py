import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from seqlearn import discount as d
from seqlearn.timedist import DecisionTimeDistribution, TruncationWarning

from oracles import expected_discount_quad


def test_factories_start_at_one():
    for rho in (d.exponential(0.7), d.hyperbolic(2.0), d.truncated_linear(3.0),
                d.constant_delay(0.5), d.constant()):
        assert rho(0.0) == pytest.approx(1.0)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        d.exponential(1.0)(-0.1)


def test_constant_delay_is_truncated_linear():
    assert d.constant_delay(0.25)(2.0) == pytest.approx(d.truncated_linear(4.0)(2.0))


def test_tabulated_nonconvex_rejected_unless_allowed():
    with pytest.raises(d.NonConvexDiscount):
        d.tabulated([0, 1, 2, 3], [1, 1, 1, 0])
    rho = d.tabulated([0, 1, 2, 3], [1, 1, 1, 0], check=False)
    assert not d.is_convex_decreasing(rho)


def test_json_round_trip():
    rho = d.mixture([0.3, 0.7], [d.exponential(1.0), d.hyperbolic(0.5)])
    back = d.from_json(rho.to_json())
    t = np.linspace(0, 10, 51)
    assert np.allclose(back(t), rho(t))


@pytest.mark.parametrize("rho", [d.exponential(1.0), d.hyperbolic(1.0), d.truncated_linear(3.0),
                                 d.mixture([0.5, 0.5], [d.exponential(2.0),
                                                        d.truncated_linear(5.0)])])
def test_expected_discount_exponential_time_matches_quadrature(rho):
    lam = 1.3
    dist = DecisionTimeDistribution.exponential(lam)
    ref = expected_discount_quad(rho, lambda t: lam * math.exp(-lam * t))
    assert d.expected_discount(rho, dist) == pytest.approx(ref, abs=1e-9)


def test_expected_discount_geometric_sum():
    q = 0.3
    got = d.expected_discount(d.exponential(0.5), DecisionTimeDistribution.geometric(q))
    ref = sum(q * (1 - q) ** (t - 1) * math.exp(-0.5 * t) for t in range(1, 400))
    assert got == pytest.approx(ref, abs=1e-12)


def test_truncated_numeric_distribution_warns():
    g = np.linspace(0, 1, 11)
    dist = DecisionTimeDistribution.numeric(g, 0.5 * g)
    with pytest.warns(TruncationWarning):
        d.expected_discount(d.constant(), dist)


def test_hyperbolic_tail_is_not_summable():
    dec = d.decompose_truncated_linear(d.hyperbolic(1.0), 10)
    assert not dec.tail_ok


@pytest.mark.parametrize("rho", [d.exponential(1.0), d.hyperbolic(1.0), d.truncated_linear(6.0)])
def test_decomposition_reconstructs_on_periods(rho):
    dec = d.decompose_truncated_linear(rho, 12)
    t = np.arange(1, 12, dtype=float)
    assert np.max(np.abs(dec.reconstruct(t) - rho(t))) < 1e-12
    assert all(p.slope <= 0 for p in dec.pieces)


@given(st.lists(st.floats(0.05, 3.0), min_size=1, max_size=3),
       st.lists(st.floats(0.1, 1.0), min_size=3, max_size=3))
def test_decomposition_of_random_convex_mixtures(rates, weights):
    comps = [d.exponential(r) for r in rates]
    w = np.asarray(weights[:len(comps)])
    rho = d.mixture(w / w.sum(), comps)
    dec = d.decompose_truncated_linear(rho, 16)
    t = np.arange(1, 16, dtype=float)
    assert np.max(np.abs(dec.reconstruct(t) - rho(t))) < 1e-10


def test_nonconvex_decomposition_raises():
    rho = d.tabulated([0, 1, 2, 3], [1, 1, 1, 0], check=False)
    with pytest.raises(d.NonConvexDiscount):
        d.decompose_truncated_linear(rho, 4)
