import numpy as np
import pytest
from hypothesis import given, strategies as st

from seqlearn.timedist import (DecisionTimeDistribution as D, exhaustiveness_check, read_csv,
                               sosd_compare, write_csv)

from oracles import integrated_cdf_quad


def test_analytic_means():
    assert D.deterministic(1.5).mean() == 1.5
    assert D.exponential(2.0).mean() == 0.5
    assert D.geometric(0.25).mean() == 4.0


@pytest.mark.parametrize("dist,cdf", [
    (D.exponential(1.0), lambda t: 1 - np.exp(-t)),
    (D.geometric(0.4), lambda t: 1 - 0.6 ** np.floor(t)),
    (D.deterministic(1.0), lambda t: float(t >= 1.0)),
])
def test_integrated_cdf_matches_quadrature(dist, cdf):
    for s in (0.3, 1.0, 2.7, 6.0):
        assert float(dist.integrated_cdf(s)) == pytest.approx(integrated_cdf_quad(cdf, s),
                                                              abs=1e-7)


def test_numeric_integration_is_exact_on_piecewise_linear():
    g = np.array([0.0, 1.0, 3.0])
    dist = D.numeric(g, np.array([0.0, 0.5, 1.0]))
    assert float(dist.integrated_cdf(3.0)) == pytest.approx(0.25 + 1.5)
    assert dist.mean() == pytest.approx(3.0 - 1.75)


def test_empirical_censoring_flag():
    e = D.empirical([0.5, 1.0, 2.0], n_censored=1, horizon=3.0)
    assert "censored" in e.flags and e.cdf_at(2.5) == pytest.approx(0.75)


def test_chain_of_canonical_laws():
    det, exp_ = D.deterministic(1.0, horizon=10), D.exponential(1.0)
    assert sosd_compare(det, exp_).verdict == "d2_mps_of_d1"
    assert sosd_compare(exp_, det).verdict == "d1_mps_of_d2"
    assert sosd_compare(exp_, exp_).verdict == "equal"


def test_unequal_means_are_incomparable():
    v = sosd_compare(D.exponential(1.0), D.exponential(2.0))
    assert v.verdict == "incomparable" and "means" in v.reason


def test_crossing_integrated_cdfs_incomparable():
    # same mean 1: a two-point law on {0.5, 1.5} and a two-point law on {0, 1.25}
    a = D.empirical([0.5] * 5000 + [1.5] * 5000)
    b = D.empirical([0.0] * 2000 + [1.25] * 8000)
    assert sosd_compare(a, b).verdict == "incomparable"


def test_exhaustiveness():
    assert exhaustiveness_check(D.exponential(1.0), 1.0, 1.0)
    assert not exhaustiveness_check(D.exponential(0.5), 1.0, 1.0)


@given(st.floats(0.05, 5.0))
def test_csv_round_trip(tmp_path_factory, rate):
    dist = D.exponential(rate, n=257)
    p = write_csv(dist, tmp_path_factory.mktemp("csv") / "d.csv")
    back = read_csv(p)
    assert np.array_equal(back.grid, dist.grid) and np.array_equal(back.cdf, dist.cdf)


@given(st.floats(0.01, 0.99))
def test_geometric_mean_preserving_spread_of_point_mass(q):
    # a geometric law with mean 1/q spreads the point mass at 1/q
    det = D.deterministic(1.0 / q, horizon=20.0 / q)
    assert sosd_compare(det, D.geometric(q)).verdict in ("d2_mps_of_d1", "equal")


@pytest.mark.parametrize("dist", [D.deterministic(1.0, horizon=5), D.geometric(0.3, horizon=120),
                                  D.empirical([0.2, 0.9, 0.9, 1.7])])
def test_step_laws_keep_mean_through_csv(tmp_path, dist):
    back = read_csv(write_csv(dist, tmp_path / "d.csv"))
    assert back.mean() == pytest.approx(dist.mean(), abs=1e-12)
    s = np.linspace(0, dist.horizon, 37)
    assert np.allclose(back.integrated_cdf(s), dist.integrated_cdf(s), atol=1e-12)
