import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqlearn import fpt
from seqlearn.fpt import FptProblem

from oracles import fpt_density_images, mean_exit_time_bvp


def test_series_mean_and_hit_probability():
    pb = FptProblem()
    dist = fpt.fpt_series(pb)
    assert dist.mean() == pytest.approx(1.0, abs=1e-9)
    lo, hi = fpt.barrier_masses_series(pb, np.array([pb.horizon]))
    assert hi[0] == pytest.approx(0.5, abs=1e-10)


@settings(max_examples=15)
@given(st.floats(0.1, 0.9), st.floats(0.05, 1.0))
def test_series_mean_matches_boundary_value_problem(start, sigma2):
    pb = FptProblem(start=start, sigma2=sigma2)
    ref = mean_exit_time_bvp(start, 0.0, 1.0, sigma2)
    assert fpt.fpt_series(pb).mean() == pytest.approx(ref, rel=1e-6)


def test_series_density_matches_images():
    pb = FptProblem(start=0.3)
    t = np.array([0.02, 0.1, 0.5, 2.0])
    got = fpt.density_series(pb, t)
    ref = [fpt_density_images(s, 0.3, 0.0, 1.0, 0.25) for s in t]
    assert np.allclose(got, ref, rtol=1e-8, atol=1e-12)


def test_short_horizon_flagged():
    assert "short_horizon" in fpt.fpt_series(FptProblem(horizon=1.0)).flags


def test_pde_mass_conservation():
    sol = fpt.solve_pde(FptProblem(start=0.3, horizon=3.0))
    total = sol.survival + sol.absorbed_lo + sol.absorbed_hi
    assert np.max(np.abs(total - 1.0)) < 1e-11  # roundoff over 3000 steps


def test_pde_projected_hit_probability():
    sol = fpt.solve_pde(FptProblem(start=0.75, horizon=2.0))
    assert sol.projected_hit_hi() == pytest.approx(0.75, abs=1e-11)


def test_pde_converges_to_series():
    pb = FptProblem(horizon=4.0)
    ref = fpt.fpt_series(pb)
    coarse = fpt.sup_distance(fpt.fpt_pde(pb, dt=1e-3), ref)
    fine = fpt.sup_distance(fpt.fpt_pde(pb, dt=5e-4), ref)
    assert coarse < 1e-3 and fine < 0.6 * coarse


def test_explicit_scheme_stability_guard():
    with pytest.raises(fpt.StabilityError):
        fpt.solve_pde(FptProblem(horizon=0.1), n_space=401, dt=1e-3, theta=0.0)


@pytest.mark.parametrize("t", [0.0, 0.05, 0.25, 1.0])
def test_cross_section_total_mass(t):
    cs = fpt.cross_section(FptProblem(), t, n_points=801)
    assert cs.total_mass == pytest.approx(1.0, abs=1e-6)


def test_cross_section_routes_agree():
    pb = FptProblem(horizon=1.0)
    a = fpt.cross_section(pb, 0.25, n_points=401, method="series")
    b = fpt.cross_section(pb, 0.25, n_points=401, method="pde")
    assert abs(a.mass_hi - b.mass_hi) < 2e-3
    assert b.total_mass == pytest.approx(1.0, abs=1e-9)
