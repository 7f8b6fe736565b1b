"""Choosing the target lottery: stationary value, g-function and concavification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import linprog

from .discount import DiscountFunction, expected_discount, exponential
from .measure import (DecisionUtility, PosteriorLottery, UncertaintyMeasure, as_belief,
                      binary_chart, simplex_grid)
from .timedist import DecisionTimeDistribution

TOL = 1e-8
MAX_ITER = 500
BINARY_GRID = 1001
SIMPLEX_RESOLUTION = 24
ZOOM_LEVELS = 3
ATOM_MERGE = 1e-9
QUAD_TAIL = 1e-10


class NonConvergence(RuntimeError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


def _expectations(lottery: PosteriorLottery, F: DecisionUtility, H: UncertaintyMeasure):
    EF = float(lottery.probs @ np.asarray(F(lottery.posteriors)))
    EH = float(lottery.probs @ np.asarray(H(lottery.posteriors)))
    return EF, EH, float(H(lottery.prior))


def stationary_value(lottery: PosteriorLottery, F: DecisionUtility, H: UncertaintyMeasure,
                     c: float, rho_rate: float) -> float:
    """Discounted value of learning ``lottery`` at full capacity under exponential discounting."""
    EF, EH, Hmu = _expectations(lottery, F, H)
    return c * EF / (c + rho_rate * max(Hmu - EH, 0.0))


def lottery_value(lottery: PosteriorLottery, F: DecisionUtility, H: UncertaintyMeasure,
                  c: float, discount: DiscountFunction) -> float:
    """``E[F] * E[rho(T)]`` with ``T`` exponential of rate ``c / (H(prior) - E[H])``."""
    if discount.kind == "exponential":
        return stationary_value(lottery, F, H, c, discount.params["rate"])
    EF, EH, Hmu = _expectations(lottery, F, H)
    gap = Hmu - EH
    if gap <= 1e-15:
        return EF * float(discount(0.0))
    return EF * expected_discount(discount, DecisionTimeDistribution.exponential(c / gap))


def _quad_horizon(f: Callable, scale: float) -> float:
    T = 30.0 * scale
    while abs(f(T)) > QUAD_TAIL and T < 1e6 * scale:
        T *= 2.0
    return T


def g_function(x: float, discount: DiscountFunction, c: float, H_mu: float,
               n: int = 20_001) -> float:
    """Marginal rate at which waiting cost rises with the target's information content.

    Ratio of ``int -rho'(t) exp(-c t / d) t / d`` to ``int rho(t) exp(-c t / d)``
    with ``d = H_mu - x``, both by composite Simpson on a horizon where the
    integrands fall below 1e-10.
    """
    d = H_mu - x
    if d <= 0:
        raise ValueError("x must be below H_mu (no information left to acquire)")
    if discount.kind == "constant":
        return 0.0
    a = c / d
    num_f = lambda t: -np.asarray(discount.derivative(t)) * np.exp(-a * t) * t / d
    den_f = lambda t: np.asarray(discount(t)) * np.exp(-a * t)
    T = max(_quad_horizon(num_f, 1 / a), _quad_horizon(den_f, 1 / a))
    n += (n + 1) % 2
    t = np.linspace(0.0, T, n)
    return float(simpson(num_f(t), x=t) / simpson(den_f(t), x=t))


def g_exponential(x: float, rate: float, c: float, H_mu: float) -> float:
    return rate / (c + rate * (H_mu - x))


# -- concavification -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Envelope:
    value: float
    lottery: PosteriorLottery


def _upper_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the upper hull (x sorted ascending); collinear points are kept."""
    hull = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross > 0:  # b lies strictly below the chord a-i
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull)


def _binary_bracket(G: Callable, mu: float, grid: np.ndarray):
    x = np.union1d(grid, [mu])
    y = np.asarray(G(x), dtype=float)
    h = _upper_hull(x, y)
    hx = x[h]
    k = int(np.searchsorted(hx, mu))
    if k < hx.size and hx[k] == mu:
        return mu, mu, float(y[h][k])
    a, b = h[k - 1], h[k]
    w = (x[b] - mu) / (x[b] - x[a])
    return float(x[a]), float(x[b]), float(w * y[a] + (1 - w) * y[b])


def concavify_binary(G: Callable, mu: float, grid=None, zoom: int = ZOOM_LEVELS) -> Envelope:
    """Concave envelope of ``G`` on [0, 1] at ``mu`` with a supporting lottery of <= 2 atoms.

    ``G`` takes probabilities of state 1. After the grid hull, each atom is
    refined ``zoom`` times on a finer grid around it.
    """
    grid = np.linspace(0.0, 1.0, BINARY_GRID) if grid is None else np.asarray(grid, float)
    if grid.size < 2 or grid[0] > 0 or grid[-1] < 1:
        raise ValueError("grid must cover [0, 1]")
    a, b, val = _binary_bracket(G, mu, grid)
    h = float(np.max(np.diff(grid)))
    for _ in range(zoom):
        if a == b:
            break
        local = [np.linspace(max(0.0, z - 2 * h), min(1.0, z + 2 * h), 401) for z in (a, b)]
        fine = np.unique(np.concatenate([grid, *local]))
        a2, b2, val2 = _binary_bracket(G, mu, fine)
        if val2 < val - 1e-15:
            break
        a, b, val = a2, b2, val2
        grid, h = fine, 4 * h / 400
    if b - a < ATOM_MERGE or min(mu - a, b - mu) < ATOM_MERGE:
        # an atom on the prior carries all the weight: no information
        lot = PosteriorLottery.degenerate(mu)
        val = float(np.asarray(G(np.array([mu])))[0])
    else:
        w = (b - mu) / (b - a)
        lot = PosteriorLottery(binary_chart(np.array([a, b])), np.array([w, 1 - w]),
                               as_belief(mu))
    return Envelope(float(val), lot)


def concavify_simplex(G: Callable, mu, resolution: int = SIMPLEX_RESOLUTION) -> Envelope:
    """Concave envelope on the simplex (up to 4 states) by a vertex-solution LP over a grid."""
    mu = as_belief(mu)
    k = mu.size
    if k > 4:
        raise ValueError("simplex concavification supports at most 4 states")
    pts = np.vstack([simplex_grid(k, resolution), mu[None, :]])
    vals = np.asarray(G(pts), dtype=float)
    res = linprog(-vals, A_eq=pts.T, b_eq=mu, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"concavification LP failed: {res.message}")
    w = res.x
    keep = w > 1e-12
    probs = w[keep] / w[keep].sum()
    post = pts[keep]
    return Envelope(float(-res.fun), PosteriorLottery(post, probs, mu))


def concavify(G: Callable, mu, grid=None) -> Envelope:
    """Concave envelope value at ``mu`` and a supporting lottery.

    ``G`` maps beliefs with states on the last axis to values. Binary
    problems use a 2-d upper hull; larger ones the simplex LP.
    """
    mu_arr = as_belief(mu)
    if mu_arr.size == 2:
        return concavify_binary(lambda x: G(binary_chart(x)), float(mu_arr[1]), grid)
    res = SIMPLEX_RESOLUTION if grid is None else int(grid)
    return concavify_simplex(G, mu_arr, res)


def gross_value(F: DecisionUtility, H: UncertaintyMeasure, lam: float) -> Callable:
    return lambda b: np.asarray(F(b)) + lam * np.asarray(H(b))


# -- fixed point -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TargetSolution:
    lottery: PosteriorLottery
    lam: float
    value: float
    residual: float
    iterations: int
    trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"atoms": self.lottery.to_json()["atoms"], "prior": self.lottery.prior.tolist(),
                "lambda": self.lam, "value": self.value, "residual": self.residual,
                "iterations": self.iterations}


def _multiplier(lottery, F, H, c, discount) -> float:
    if discount.kind == "exponential":
        return discount.params["rate"] / c * lottery_value(lottery, F, H, c, discount)
    EF, EH, Hmu = _expectations(lottery, F, H)
    if Hmu - EH <= 1e-15:
        return 0.0
    return g_function(EH, discount, c, Hmu) * EF


def solve_target(F: DecisionUtility, H: UncertaintyMeasure, mu, c: float,
                 rho_rate: float | None = 1.0, discount: DiscountFunction | None = None,
                 max_iter: int = MAX_ITER, tol: float = TOL, grid=None) -> TargetSolution:
    """Fixed point between the multiplier on ``H`` and the concavified target.

    Start from full revelation, concavify ``F + lam H``, recompute ``lam``
    from the new lottery and repeat until the value moves less than
    ``tol``. ``lam`` is damped by 1/2 once the value starts oscillating.
    """
    if discount is None:
        if rho_rate is None:
            raise ValueError("give rho_rate or a discount function")
        discount = exponential(rho_rate) if rho_rate > 0 else None
    mu_b = as_belief(mu)
    k = mu_b.size
    if discount is None:  # no discounting: lam = 0
        env = concavify(gross_value(F, H, 0.0), mu_b, grid)
        v = float(env.lottery.probs @ np.asarray(F(env.lottery.posteriors)))
        return TargetSolution(env.lottery, 0.0, v, 0.0, 1, [(0.0, v)])

    vertices = np.eye(k)
    lottery = PosteriorLottery(vertices, mu_b.copy(), mu_b)
    value = lottery_value(lottery, F, H, c, discount)
    lam = _multiplier(lottery, F, H, c, discount)
    trace = [(lam, value)]
    damp = False
    last_step = 0.0
    for it in range(1, max_iter + 1):
        env = concavify(gross_value(F, H, lam), mu_b, grid)
        new_lottery = env.lottery
        new_value = lottery_value(new_lottery, F, H, c, discount)
        new_lam = _multiplier(new_lottery, F, H, c, discount)
        step = new_value - value
        if it > 2 and step * last_step < 0 and abs(step) > tol:
            damp = True
        lam_next = 0.5 * (lam + new_lam) if damp else new_lam
        trace.append((lam_next, new_value))
        lottery, value, last_step = new_lottery, new_value, step
        if abs(step) < tol and abs(new_lam - lam) < max(tol, 1e-6):
            return TargetSolution(lottery, new_lam, value, abs(new_lam - lam), it, trace)
        lam = lam_next
    raise NonConvergence(f"no fixed point within {max_iter} iterations", trace)


def symmetric_oracle(F: DecisionUtility, H: UncertaintyMeasure, c: float, rho_rate: float,
                     n: int = 200_001):
    """Brute-force grid search over lotteries with atoms ``1/2 -+ d`` at prior 1/2."""
    d = np.linspace(0.0, 0.5, n)
    nu = 0.5 + d
    EF = 0.5 * (np.asarray(F.binary(nu)) + np.asarray(F.binary(1 - nu)))
    gap = H.binary(0.5) - np.asarray(H.binary(nu))
    v = c * EF / (c + rho_rate * gap)
    i = int(np.argmax(v))
    return float(nu[i]), float(v[i])


def two_atom_oracle(F: DecisionUtility, H: UncertaintyMeasure, mu: float, c: float,
                    rho_rate: float, n: int = 2001):
    """Grid search over all two-atom lotteries bracketing ``mu``."""
    lo = np.linspace(0.0, mu, n)
    hi = np.linspace(mu, 1.0, n)
    A, B = np.meshgrid(lo, hi, indexing="ij")
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(B > A, (B - mu) / (B - A), 1.0)
    EF = w * np.asarray(F.binary(A)) + (1 - w) * np.asarray(F.binary(B))
    EH = w * np.asarray(H.binary(A)) + (1 - w) * np.asarray(H.binary(B))
    v = c * EF / (c + rho_rate * (H.binary(mu) - EH))
    i = np.unravel_index(int(np.argmax(v)), v.shape)
    return float(A[i]), float(B[i]), float(v[i])


def prior_sweep(F: DecisionUtility, H: UncertaintyMeasure, priors, c: float,
                rho_rate: float) -> list:
    """Solve at each binary prior and report value, information cost and mean wait."""
    from .measure import info_cost
    rows = []
    for m in priors:
        sol = solve_target(F, H, float(m), c, rho_rate)
        I = info_cost(sol.lottery, H)
        rows.append({"prior": float(m), "value": sol.value, "info_cost": I,
                     "mean_wait": I / c, "lambda": sol.lam,
                     "atoms": [float(nu[1]) for nu in sol.lottery.posteriors]})
    return rows


def comparative_static_holds(rows: list, tol: float = 1e-9) -> bool:
    """Higher solution value comes with weakly less information and shorter waiting."""
    ordered = sorted(rows, key=lambda r: r["value"])
    I = np.array([r["info_cost"] for r in ordered])
    return bool(np.all(np.diff(I) <= tol))
