"""Sanity checks on the test oracles themselves."""

import math

import pytest

from oracles import (discounted_hit_value_bvp, fpt_density_images, g_exponential_quad,
                     mean_exit_time_bvp, symmetric_target_grid_search)


def test_mean_exit_time_bvp_matches_parabola():
    assert mean_exit_time_bvp(0.3, 0.0, 1.0, 0.25) == pytest.approx(0.3 * 0.7 / 0.25, abs=1e-8)


def test_hit_value_bvp_at_barrier():
    assert discounted_hit_value_bvp(0.0, 1.0, 0.25) == pytest.approx(1.0, abs=1e-9)


def test_images_density_integrates_to_one():
    from scipy import integrate
    tot = integrate.quad(lambda t: fpt_density_images(t, 0.5, 0, 1, 0.25), 1e-6, 40,
                         limit=400)[0]
    assert tot == pytest.approx(1.0, abs=1e-6)


def test_grid_search_no_discount_reveals_everything():
    nu, v = symmetric_target_grid_search(1.0, 1e-12)
    assert nu == pytest.approx(1.0) and v == pytest.approx(1.0, abs=1e-9)


def test_g_quad_positive():
    assert g_exponential_quad(0.2, 1.0, 1.0, 1.0) > 0 and math.isfinite(
        g_exponential_quad(0.2, 1.0, 1.0, 1.0))
