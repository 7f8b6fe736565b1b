"""Reference implementations used only by the tests.

Each one takes a different numerical route from the library code it checks.
"""

import math

import numpy as np
from scipy import integrate


def stationary_value_loop(c, I_bar, Vstar, rho, horizon):
    """Plain loop over periods: stop w.p. q each period, value rho_t V*."""
    q = min(c / I_bar, 1.0)
    total, alive = 0.0, 1.0
    for t in range(1, horizon + 1):
        total += float(rho(float(t))) * alive * q * Vstar
        alive *= 1.0 - q
    return total


def mean_exit_time_bvp(x, lo, hi, sigma2):
    """Solve (sigma2/2) u'' = -1, u(lo) = u(hi) = 0 numerically and evaluate at x."""
    xs = np.linspace(lo, hi, 201)
    sol = integrate.solve_bvp(lambda z, y: np.vstack([y[1], -2.0 / sigma2 * np.ones_like(z)]),
                              lambda ya, yb: np.array([ya[0], yb[0]]),
                              xs, np.zeros((2, xs.size)), tol=1e-10)
    return float(sol.sol(x)[0])


def discounted_hit_value_bvp(x, rate, sigma2):
    """Solve rate V = (sigma2/2) V'' on [0, 1] with V = 1 at both ends."""
    xs = np.linspace(0.0, 1.0, 401)
    sol = integrate.solve_bvp(lambda z, y: np.vstack([y[1], 2.0 * rate / sigma2 * y[0]]),
                              lambda ya, yb: np.array([ya[0] - 1.0, yb[0] - 1.0]),
                              xs, np.vstack([np.ones_like(xs), np.zeros_like(xs)]), tol=1e-10)
    return float(sol.sol(x)[0])


def integrated_cdf_quad(cdf, s):
    val, _ = integrate.quad(cdf, 0.0, s, limit=500)
    return val


def expected_discount_quad(rho, density, upper=np.inf):
    val, _ = integrate.quad(lambda t: float(rho(t)) * density(t), 0.0, upper, limit=500)
    return val


def fpt_density_images(t, x, lo, hi, sigma2, n_images=40):
    """Method-of-images density of the exit time (short-time expansion)."""
    L = hi - lo
    s = math.sqrt(sigma2 * t)
    tot = 0.0
    for k in range(-n_images, n_images + 1):
        for a, sgn in ((x - lo + 2 * k * L, 1.0), (hi - x + 2 * k * L, 1.0)):
            tot += sgn * a / (math.sqrt(2 * math.pi) * s * t) * math.exp(-a * a / (2 * s * s))
    return tot


def symmetric_target_grid_search(c, rate, n=100_001):
    """Binary matching payoff, quadratic H, prior 1/2: search atoms 1/2 -+ d directly."""
    best = (-1.0, None)
    d = np.linspace(0.0, 0.5, n)
    EF = 0.5 + d
    gap = 4.0 * d**2
    lam = c / np.where(gap > 0, gap, np.nan)
    v = np.where(gap > 0, EF * lam / (lam + rate), EF)
    i = int(np.nanargmax(v))
    best = (float(0.5 + d[i]), float(v[i]))
    return best


def g_exponential_quad(x, rate, c, H_mu):
    d = H_mu - x
    a = c / d
    num = integrate.quad(lambda t: rate * math.exp(-rate * t) * math.exp(-a * t) * t / d,
                         0, np.inf)[0]
    den = integrate.quad(lambda t: math.exp(-rate * t) * math.exp(-a * t), 0, np.inf)[0]
    return num / den
