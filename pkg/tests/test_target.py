import math

import numpy as np
import pytest

from seqlearn import discount as d
from seqlearn import target as tg
from seqlearn.measure import DecisionUtility, bayes_plausible, entropy, quadratic

from oracles import g_exponential_quad, symmetric_target_grid_search

F2 = DecisionUtility.binary_match()
H = quadratic()


@pytest.fixture(scope="module")
def worked():
    return tg.solve_target(F2, H, 0.5, 1.0, rho_rate=1.0)


def test_worked_instance(worked):
    nu = max(p[1] for p in worked.lottery.posteriors)
    assert nu == pytest.approx(math.sqrt(2) / 2, abs=1e-4)
    assert worked.value == pytest.approx(0.6036, abs=1e-4)
    assert bayes_plausible(worked.lottery)


def test_worked_instance_against_grid_search(worked):
    nu, v = symmetric_target_grid_search(1.0, 1.0)
    assert max(p[1] for p in worked.lottery.posteriors) == pytest.approx(nu, abs=1e-4)
    assert worked.value == pytest.approx(v, abs=1e-6)


def test_worked_instance_against_two_atom_search(worked):
    _, _, v = tg.two_atom_oracle(F2, H, 0.5, 1.0, 1.0)
    assert worked.value >= v - 1e-9


def test_no_discounting_reveals_everything():
    sol = tg.solve_target(F2, H, 0.5, 1.0, rho_rate=0.0)
    assert sorted(p[1] for p in sol.lottery.posteriors) == pytest.approx([0.0, 1.0])
    assert sol.value == pytest.approx(1.0)


def test_confident_prior_learns_nothing():
    sol = tg.solve_target(F2, H, 0.7, 1.0, rho_rate=1.0)
    assert sol.lottery.support_size == 1 and sol.value == pytest.approx(0.7)


def test_hyperbolic_discount_converges():
    sol = tg.solve_target(F2, H, 0.5, 1.0, discount=d.hyperbolic(1.0))
    assert bayes_plausible(sol.lottery) and 0.5 < sol.value < 1.0


def test_iteration_cap_raises_with_trace():
    with pytest.raises(tg.NonConvergence) as exc:
        tg.solve_target(F2, H, 0.5, 1.0, rho_rate=1.0, max_iter=1)
    assert len(exc.value.trace) >= 2


def test_comparative_static():
    rows = tg.prior_sweep(F2, H, [0.5, 0.55, 0.6, 0.65, 0.7], 1.0, 1.0)
    assert tg.comparative_static_holds(rows)


def test_concave_envelope_of_known_function():
    G = lambda x: np.abs(np.asarray(x) - 0.5)  # convex: envelope splits to the ends
    env = tg.concavify_binary(G, 0.3)
    assert env.value == pytest.approx(0.5, abs=1e-9)
    assert bayes_plausible(env.lottery)


def test_support_bound_on_random_instances(rng):
    for i in range(50):
        k = 2 if i < 35 else 3
        payoffs = rng.uniform(0, 1, size=(int(rng.integers(2, 4)), k))
        F = DecisionUtility.max_affine(payoffs)
        prior = rng.dirichlet(np.ones(k) * 2)
        Hk = quadratic() if i % 2 else entropy()
        sol = tg.solve_target(F, Hk, prior, float(rng.uniform(0.5, 2.0)),
                              rho_rate=float(rng.uniform(0.2, 2.0)))
        assert sol.lottery.support_size <= 2 * k
        assert bayes_plausible(sol.lottery, tol=1e-8)


@pytest.mark.parametrize("x", np.linspace(0.0, 0.8, 5))
@pytest.mark.parametrize("rate", [0.1, 0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("c", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_g_function_lattice(x, rate, c):
    got = tg.g_function(x, d.exponential(rate), c, 1.0)
    assert got == pytest.approx(tg.g_exponential(x, rate, c, 1.0), abs=1e-6)
    assert got == pytest.approx(g_exponential_quad(x, rate, c, 1.0), abs=1e-6)


def test_g_function_stable_under_refinement():
    a = tg.g_function(0.3, d.hyperbolic(1.0), 1.0, 1.0, n=20_001)
    b = tg.g_function(0.3, d.hyperbolic(1.0), 1.0, 1.0, n=40_001)
    assert a == pytest.approx(b, abs=1e-9)
