import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqlearn import dp
from seqlearn import discount as d

from oracles import stationary_value_loop

params = st.tuples(st.floats(0.05, 0.9), st.floats(1.0, 3.0))


@given(params, st.floats(0.05, 3.0))
def test_closed_form_matches_loop(ci, rate):
    c, I_bar = ci
    rho = d.exponential(rate)
    got = dp.closed_form_value(c, I_bar, 2.0, rho, horizon=300)
    assert got == pytest.approx(stationary_value_loop(c, I_bar, 2.0, rho, 300), abs=1e-12)


def test_closed_form_tail_bound_covers_remainder():
    rho = d.hyperbolic(1.0)
    full = dp.closed_form_value(0.2, 1.0, 1.0, rho)
    part = dp.closed_form_value(0.2, 1.0, 1.0, rho, horizon=20)
    assert 0 <= full - part <= dp.closed_form_tail_bound(0.2, 1.0, 1.0, rho, 20)


def test_degenerate_capacity_stops_at_once():
    assert dp.closed_form_value(2.0, 1.0, 3.0, d.exponential(1.0)) == pytest.approx(
        3.0 * math.exp(-1.0))


def test_continuous_mode_is_laplace_transform():
    assert dp.closed_form_value(0.5, 1.0, 1.0, d.exponential(1.0), mode="continuous") == \
        pytest.approx(0.5 / 1.5)


def test_stationary_policy_is_exhaustive():
    pol = dp.stationary_policy(0.25, 1.0, 40)
    assert pol.is_feasible(0.25, 1.0)
    assert np.allclose(pol.constraint_lhs(1.0), 0.25)
    dist = dp.stationary_policy_distribution(0.25, 1.0)
    assert dist.mean() == pytest.approx(dp.expected_time_lower_bound(0.25, 1.0))


def test_banking_policy_feasibility():
    ok = dp.RelaxedPolicy([0.0, 1.0], [0.0, 0.25, 0.0])
    assert ok.is_feasible(0.25, 0.5)
    bad = dp.RelaxedPolicy([0.0, 1.0], [0.0, 0.5, 0.0])
    assert not bad.is_feasible(0.25, 0.5)


@pytest.mark.parametrize("c,I_bar,T", [(0.25, 1.0, 6), (0.4, 1.0, 5), (1.0, 3.0, 8),
                                       (2.0, 1.0, 4)])
def test_backward_induction_matches_closed_form(c, I_bar, T):
    g = dp.default_I_grid(I_bar, 41)
    bi = dp.backward_induction(c, I_bar, 1.0, T, g)
    cf = dp.closed_form_table(c, I_bar, 1.0, T, g)
    assert bi.max_abs_diff(cf) < 1e-10
    assert bi.is_monotone()
    interior = (c + g) < I_bar
    assert np.all(bi.best_next[1:T][:, interior] == 0)


def test_budget_exceeded():
    pg = dp.default_p_grid(0.25, 1.0, 51)
    with pytest.raises(dp.BudgetExceeded):
        dp.brute_force_oracle(0.25, 1.0, 1.0, d.truncated_linear(8), 8, pg,
                              np.linspace(0, 1, 51))


def test_count_matches_enumeration():
    pg = dp.default_p_grid(0.25, 1.0, 5)
    ig = np.linspace(0, 1, 5)
    res = dp.brute_force_oracle(0.25, 1.0, 1.0, d.exponential(1.0), 3, pg, ig)
    assert res.n_evaluated == dp.count_policies(0.25, 1.0, pg, ig, 3)


def _random_convex(rng):
    k = int(rng.integers(1, 4))
    comps = []
    for _ in range(k):
        kind = rng.integers(3)
        if kind == 0:
            comps.append(d.exponential(float(rng.uniform(0.05, 2.0))))
        elif kind == 1:
            comps.append(d.hyperbolic(float(rng.uniform(0.1, 2.0))))
        else:
            comps.append(d.truncated_linear(float(rng.uniform(2.0, 10.0))))
    w = rng.dirichlet(np.ones(k))
    return d.mixture(w, comps)


def test_oracle_never_beats_stationary_for_random_convex_discounts(rng):
    for _ in range(20):
        rho = _random_convex(rng)
        c = float(rng.uniform(0.15, 0.6))
        pg = dp.default_p_grid(c, 1.0, 6)
        res = dp.brute_force_oracle(c, 1.0, 1.0, rho, 4, pg, np.linspace(0, 1, 6))
        assert res.certified and res.value <= res.closed_form + 1e-12


def test_nonconvex_discount_yields_witness():
    rho = d.tabulated([0, 1, 2, 3], [1, 1, 1, 0], check=False)
    res = dp.brute_force_oracle(1.0, 2.0, 1.0, rho, 3)
    assert not res.certified
    assert res.value == pytest.approx(1.0) and res.stationary_value == pytest.approx(0.75)
    assert res.closed_form == pytest.approx(0.75) and res.witness["gain"] == pytest.approx(0.25)


class TestDiscretization:
    c, I_bar = 1.0, 2.0

    @pytest.mark.parametrize("name", ["stationary", "ramp", "bank_then_spend"])
    def test_feasible_paths_pass(self, name):
        rate, horizon = dp.audit_rate_paths(self.c, self.I_bar)[name]
        rep = dp.discretization_certificate(rate, self.c, self.I_bar, 1e-3, horizon)
        assert rep.passed and rep.tail_mass < 1e-6
        assert rep.cdf_recursion_residual < 1e-12

    def test_stationary_path_attains_bound(self):
        rate, horizon = dp.audit_rate_paths(self.c, self.I_bar)["stationary"]
        rep = dp.discretization_certificate(rate, self.c, self.I_bar, 1e-3, horizon)
        assert rep.discrete_objective == pytest.approx(rep.discrete_bound, abs=1e-4)
        assert rep.continuous_objective == pytest.approx(rep.continuous_bound, abs=1e-6)

    def test_ramp_holds_banked_stock(self):
        rate, _ = dp.audit_rate_paths(self.c, self.I_bar)["ramp"]
        I1 = dp.banked_information(rate, self.c, self.I_bar, 1.0)
        I3 = dp.banked_information(rate, self.c, self.I_bar, 3.0)
        # trapezoid error at the rate's jump, then amplified at rate p
        assert I3 == pytest.approx(I1, abs=1e-5)

    def test_overspending_rate_is_flagged(self):
        rep = dp.discretization_certificate(lambda t: 2 * self.c / self.I_bar + 0 * t,
                                            self.c, self.I_bar, 1e-3, 5.0)
        assert not rep.feasible and rep.first_negative_I_time is not None


@pytest.mark.parametrize("rho", [d.exponential(1.0), d.hyperbolic(1.0)])
def test_convex_reduction(rho):
    rep = dp.convex_reduction(rho, 0.25, 1.0, 1.0, eps=1e-6)
    assert rep.passed and rep.gap <= 2e-6


@settings(max_examples=20)
@given(st.floats(0.05, 0.8), st.floats(0.1, 3.0), st.floats(0.0, 1.0))
def test_reduction_random_parameterizations(c, rate, w):
    rho = d.mixture([w, 1 - w], [d.exponential(rate), d.hyperbolic(rate)])
    assert dp.convex_reduction(rho, c, 1.0, 1.0, eps=1e-6).passed
