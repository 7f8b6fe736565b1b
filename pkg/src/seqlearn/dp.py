"""Relaxed stopping problem: closed forms, backward induction and oracles.

Periods are 1-based. A relaxed policy stops in period ``t`` with
conditional probability ``p_t`` and carries banked information ``I_t``
(``I_1 = 0``) subject to

    (I_bar - I_t) p_t + (I_{t+1} - I_t)(1 - p_t) <= c.

The objective is ``sum_t rho_t (1 - P_{t-1}) p_t V*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .discount import (DEFAULT_EPS, DiscountFunction, LinearPiece,
                       decompose_truncated_linear, expected_discount, truncated_linear)
from .timedist import DecisionTimeDistribution

FEAS_TOL = 1e-12
TIE_TOL = 1e-12
DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    pass


def _check_params(c, I_bar):
    if not (c > 0 and I_bar > 0):
        raise ValueError(f"need c > 0 and I_bar > 0, got c={c!r}, I_bar={I_bar!r}")


def _rho_periods(rho: Callable, t: np.ndarray) -> np.ndarray:
    return np.asarray(rho(np.asarray(t, dtype=float)), dtype=float)


# -- policies --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RelaxedPolicy:
    """``p[t-1] = p_t`` for ``t = 1..horizon``; ``I[t-1] = I_t`` for ``t = 1..horizon+1``."""

    p: np.ndarray
    I: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        I = np.array(self.I, dtype=float)
        if I.shape != (p.size + 1,):
            raise ValueError("I must have one more entry than p")
        if np.any((p < 0) | (p > 1)) or np.any(I < 0) or I[0] != 0:
            raise ValueError("need p in [0,1], I >= 0 and I_1 = 0")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "I", I)

    @property
    def horizon(self) -> int:
        return self.p.size

    def stop_cdf(self) -> np.ndarray:
        """``P_t`` for ``t = 0..horizon``."""
        return 1.0 - np.concatenate([[1.0], np.cumprod(1.0 - self.p)])

    def constraint_lhs(self, I_bar) -> np.ndarray:
        I, p = self.I, self.p
        return (I_bar - I[:-1]) * p + (I[1:] - I[:-1]) * (1.0 - p)

    def max_violation(self, c, I_bar) -> float:
        return float(np.max(self.constraint_lhs(I_bar) - c, initial=-np.inf))

    def is_feasible(self, c, I_bar) -> bool:
        return self.max_violation(c, I_bar) <= FEAS_TOL

    def value(self, rho: Callable, Vstar: float = 1.0) -> float:
        t = np.arange(1, self.horizon + 1)
        P = self.stop_cdf()
        return float(np.sum(_rho_periods(rho, t) * (1.0 - P[:-1]) * self.p) * Vstar)

    def to_json(self) -> dict:
        return {"p": self.p.tolist(), "I": self.I.tolist()}


def stationary_policy(c, I_bar, horizon: int) -> RelaxedPolicy:
    q = min(c / I_bar, 1.0)
    return RelaxedPolicy(np.full(horizon, q), np.zeros(horizon + 1))


# -- closed forms ----------------------------------------------------------

def _auto_horizon(q: float) -> int:
    if q >= 1.0:
        return 1
    return int(min(math.ceil(math.log(1e-18) / math.log1p(-q)) + 1, 10**7))


def closed_form_value(c, I_bar, Vstar, rho: Callable, horizon: int | None = None,
                      mode: str = "discrete") -> float:
    """Value of the stationary policy ``p_t = c / I_bar``, optimal under convex discounting.

    Discrete mode sums ``rho_t (1-q)^(t-1) q V*`` over ``t = 1..horizon``;
    continuous mode integrates ``rho`` against the exponential law of rate
    ``c / I_bar``.
    """
    _check_params(c, I_bar)
    if mode == "continuous":
        if not isinstance(rho, DiscountFunction):
            raise TypeError("continuous mode needs a DiscountFunction")
        return Vstar * expected_discount(rho, DecisionTimeDistribution.exponential(c / I_bar))
    if mode != "discrete":
        raise ValueError(f"unknown mode {mode!r}")
    if c >= I_bar:
        return float(_rho_periods(rho, np.array([1.0]))[0] * Vstar)
    q = c / I_bar
    H = _auto_horizon(q) if horizon is None else int(horizon)
    t = np.arange(1, H + 1, dtype=float)
    w = q * np.exp((t - 1) * math.log1p(-q))
    return float(np.sum(_rho_periods(rho, t) * w) * Vstar)


def closed_form_tail_bound(c, I_bar, Vstar, rho: Callable, horizon: int) -> float:
    """Upper bound on the discrete sum beyond ``horizon`` (``rho`` decreasing)."""
    _check_params(c, I_bar)
    if c >= I_bar:
        return 0.0
    q = c / I_bar
    r = float(_rho_periods(rho, np.array([horizon + 1.0]))[0])
    return r * math.exp(horizon * math.log1p(-q)) * Vstar


def stationary_policy_distribution(c, I_bar, horizon=None, mode: str = "discrete"
                                   ) -> DecisionTimeDistribution:
    _check_params(c, I_bar)
    if mode == "continuous":
        return DecisionTimeDistribution.exponential(c / I_bar, horizon)
    if mode != "discrete":
        raise ValueError(f"unknown mode {mode!r}")
    return DecisionTimeDistribution.geometric(min(c / I_bar, 1.0), horizon)


def expected_time_lower_bound(c, I_bar) -> float:
    _check_params(c, I_bar)
    return I_bar / c


# -- value tables ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ValueTable:
    """``V[t, j]`` is the value entering period ``t`` with ``I = I_grid[j]``.

    Row 0 is unused (NaN) so rows are indexed by period; row ``T`` is zero.
    ``best_next`` and ``best_p`` hold the maximiser where it was computed.
    """

    I_grid: np.ndarray
    V: np.ndarray
    best_next: np.ndarray | None = None
    best_p: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.V.shape[0] - 1

    def value(self, t: int, I: float) -> float:
        return float(np.interp(I, self.I_grid, self.V[t]))

    def max_abs_diff(self, other: "ValueTable") -> float:
        if not np.array_equal(self.I_grid, other.I_grid) or self.T != other.T:
            raise ValueError("tables live on different grids")
        return float(np.max(np.abs(self.V[1:] - other.V[1:])))

    def is_monotone(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.diff(self.V[1:], axis=1) >= -tol))

    def to_json(self) -> dict:
        out = {"I_grid": self.I_grid.tolist(), "V": self.V[1:].tolist(), **self.params}
        if self.best_next is not None:
            out["best_next_I"] = self.best_next[1:].tolist()
            out["best_p"] = self.best_p[1:].tolist()
        return out


def default_I_grid(I_bar, n: int = 101) -> np.ndarray:
    return np.linspace(0.0, I_bar, n)


def _validate_grid(I_grid, I_bar) -> np.ndarray:
    g = np.asarray(I_grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("I_grid must be a non-empty 1-d array")
    if np.any(np.diff(g) <= 0) or g[0] != 0 or g[-1] > I_bar + FEAS_TOL:
        raise ValueError("I_grid must increase from 0 and stay within [0, I_bar]")
    return g


def closed_form_table(c, I_bar, Vstar, T: int, I_grid=None) -> ValueTable:
    """Direct evaluation of the conjectured value for ``rho_t = (T - t) / T``."""
    _check_params(c, I_bar)
    g = default_I_grid(I_bar) if I_grid is None else _validate_grid(I_grid, I_bar)
    q = min(c / I_bar, 1.0)
    V = np.full((T + 1, g.size), np.nan)
    for t in range(1, T + 1):
        now = (T - t) / T * Vstar
        tau = np.arange(t + 1, T + 1)
        cont = np.sum((T - tau) / T * Vstar * q * (1.0 - q) ** (tau - t - 1))
        frac = (c + g) / I_bar
        V[t] = np.where(frac < 1.0, now * frac + (1.0 - frac) * cont, now)
    return ValueTable(g, V, params={"c": c, "I_bar": I_bar, "Vstar": Vstar, "T": T})


def backward_induction(c, I_bar, Vstar, T: int, I_grid=None,
                       rho: Callable | None = None) -> ValueTable:
    """Solve ``V_t(I) = max_{p, I'} rho_t p V* + (1 - p) V_{t+1}(I')`` with ``V_T = 0``.

    ``I'`` ranges over the grid. For fixed ``I'`` the objective is linear
    in ``p``, so only ``p = 0`` and the largest feasible ``p`` compete.
    Ties go to the lowest ``I'`` and then the lowest ``p``.
    """
    _check_params(c, I_bar)
    if T < 1:
        raise ValueError("T must be >= 1")
    g = default_I_grid(I_bar) if I_grid is None else _validate_grid(I_grid, I_bar)
    rho = truncated_linear(T) if rho is None else rho
    r = _rho_periods(rho, np.arange(T + 1))
    n = g.size
    V = np.full((T + 1, n), np.nan)
    V[T] = 0.0
    best_next = np.full((T + 1, n), -1, dtype=int)
    best_p = np.full((T + 1, n), np.nan)
    I_now, I_next = g[:, None], g[None, :]
    room = c + I_now - I_next  # slack left for stopping after moving to I'
    with np.errstate(divide="ignore", invalid="ignore"):
        p_max = np.where(I_next < I_bar, room / (I_bar - I_next), 1.0)
    p_max = np.clip(p_max, 0.0, 1.0)
    allowed = room >= -FEAS_TOL
    for t in range(T - 1, 0, -1):
        stop = r[t] * Vstar
        cont = V[t + 1][None, :]
        hi = p_max * stop + (1.0 - p_max) * cont
        lo = np.broadcast_to(cont, hi.shape)
        use_hi = hi > lo + TIE_TOL
        val = np.where(use_hi, hi, lo)
        val = np.where(allowed, val, -np.inf)
        top = val.max(axis=1, keepdims=True)
        j = np.argmax(val >= top - TIE_TOL, axis=1)  # lowest I' among ties
        rows = np.arange(n)
        V[t] = val[rows, j]
        best_next[t] = j
        best_p[t] = np.where(use_hi[rows, j], p_max[rows, j], 0.0)
    return ValueTable(g, V, best_next, best_p,
                      params={"c": c, "I_bar": I_bar, "Vstar": Vstar, "T": T})


# -- brute-force oracle ----------------------------------------------------

def default_p_grid(c, I_bar, n: int = 51) -> np.ndarray:
    return np.union1d(np.linspace(0.0, 1.0, n), [min(c / I_bar, 1.0)])


@dataclass(frozen=True, eq=False)
class OracleResult:
    policy: RelaxedPolicy
    value: float
    stationary_value: float
    closed_form: float
    n_evaluated: int
    certified: bool  # no grid policy beats the closed-form value
    stationary_shape: bool  # maximiser banks nothing and stops at the (snapped) rate c / I_bar
    witness: dict | None = None

    def to_json(self) -> dict:
        return {"policy": self.policy.to_json(), "value": self.value,
                "stationary_value": self.stationary_value,
                "closed_form": self.closed_form, "n_evaluated": self.n_evaluated,
                "certified": self.certified, "stationary_shape": self.stationary_shape,
                "witness": self.witness}


def _transitions(c, I_bar, p_grid, I_grid, last: bool):
    """Feasibility mask ``[I, I', p]``; the last period only allows ``I' = 0``."""
    I_now = I_grid[:, None, None]
    I_next = I_grid[None, :, None]
    p = p_grid[None, None, :]
    lhs = (I_bar - I_now) * p + (I_next - I_now) * (1.0 - p)
    ok = lhs <= c + FEAS_TOL
    if last:
        ok = ok & (np.arange(I_grid.size)[None, :, None] == 0)
    return ok


def count_policies(c, I_bar, p_grid, I_grid, n_periods: int) -> int:
    """Number of policy evaluations an exhaustive enumeration would perform."""
    p_grid, I_grid = np.asarray(p_grid, float), np.asarray(I_grid, float)
    live = np.zeros(I_grid.size, dtype=object)
    live[0] = 1
    total = 0
    for t in range(1, n_periods + 1):
        ok = _transitions(c, I_bar, p_grid, I_grid, last=(t == n_periods))
        per_state = ok.sum(axis=(1, 2)).astype(object)
        total += int(np.dot(live, per_state))
        cont = (ok & (p_grid[None, None, :] < 1.0)).sum(axis=2).astype(object)
        live = live @ cont
    return total


def brute_force_oracle(c, I_bar, Vstar, rho: Callable, T: int, p_grid=None, I_grid=None,
                       budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Enumerate every grid policy over the first ``T`` periods and keep the best.

    When ``rho_T = 0`` (the truncated-linear case) period ``T`` cannot
    contribute and only ``1..T-1`` are enumerated. Stopping for sure
    (``p = 1``) ends a path. Ties within 1e-12 go to the lexicographically
    smallest path, comparing ``(I', p)`` period by period.
    """
    _check_params(c, I_bar)
    p_grid = default_p_grid(c, I_bar, 11) if p_grid is None else np.unique(np.asarray(p_grid, float))
    I_grid = np.linspace(0.0, I_bar, 11) if I_grid is None else _validate_grid(I_grid, I_bar)
    if p_grid.size == 0 or np.any((p_grid < 0) | (p_grid > 1)):
        raise ValueError("p_grid must be non-empty within [0, 1]")
    r_all = _rho_periods(rho, np.arange(T + 1))
    n_periods = T - 1 if r_all[T] <= 0 else T
    n_periods = max(n_periods, 1)
    n_eval = count_policies(c, I_bar, p_grid, I_grid, n_periods)
    if n_eval > budget:
        raise BudgetExceeded(f"{n_eval} policy evaluations exceed the budget of {budget}")

    # live frontier: banked-info index, survival, accumulated value, row in its level
    cur_I = np.array([0])
    cur_S = np.array([1.0])
    cur_acc = np.array([0.0])
    cur_row = np.array([-1])
    parent_rows, choices = [], []  # per level
    finished = []  # (level, row, value) within TIE_TOL of the running best
    best = -np.inf
    for t in range(1, n_periods + 1):
        ok = _transitions(c, I_bar, p_grid, I_grid, last=(t == n_periods))
        s_idx, j_idx, k_idx = np.nonzero(ok[cur_I])  # C order = lexicographic
        S = cur_S[s_idx]
        p = p_grid[k_idx]
        acc = cur_acc[s_idx] + r_all[t] * S * p * Vstar
        parent_rows.append(cur_row[s_idx])
        choices.append(np.stack([j_idx, k_idx], axis=1))
        done = (p >= 1.0) | (t == n_periods)
        if np.any(done):
            idx = np.nonzero(done)[0]
            vals = acc[idx]
            m = float(vals.max())
            if m > best + TIE_TOL:
                best = m
                finished = [f for f in finished if f[2] >= best - TIE_TOL]
            near = vals >= best - TIE_TOL
            finished.extend((t, int(i), float(v)) for i, v in zip(idx[near], vals[near]))
        keep = np.nonzero(~done)[0]
        cur_I, cur_S, cur_acc, cur_row = j_idx[keep], S[keep] * (1.0 - p[keep]), acc[keep], keep

    def path(level, row):
        js, ks = [], []
        while level >= 1:
            j, k = choices[level - 1][row]
            js.append(int(j))
            ks.append(int(k))
            row = int(parent_rows[level - 1][row])
            level -= 1
        return js[::-1], ks[::-1]

    cands = [(path(lv, row), v) for lv, row, v in finished if v >= best - TIE_TOL]
    cands.sort(key=lambda item: [x for pair in zip(*item[0]) for x in pair])
    (js, ks), value = cands[0]
    p_path = p_grid[ks]
    I_path = np.concatenate([[0.0], I_grid[js]])
    policy = RelaxedPolicy(p_path, I_path)

    horizon = n_periods
    stat = stationary_policy(c, I_bar, horizon)
    stat_val = stat.value(rho, Vstar) if stat.is_feasible(c, I_bar) else -np.inf
    q = min(c / I_bar, 1.0)
    snapped = p_grid[np.argmin(np.abs(p_grid - q))]
    # positions after a sure stop carry no information
    active = np.concatenate([[True], np.cumprod(p_path < 1.0)[:-1].astype(bool)])
    stationary_shape = (np.all(I_path[:-1][active] == 0.0)
                        and np.all(np.abs(p_path[active] - snapped) <= FEAS_TOL))
    # a path may stop for sure in its last period, so the benchmark is the
    # infinite-horizon value, not the stationary policy cut off at the window
    bound = closed_form_value(c, I_bar, Vstar, rho)
    certified = bool(value <= bound + TIE_TOL)
    witness = None
    if not certified:
        witness = {"policy": policy.to_json(), "value": value, "closed_form": bound,
                   "stationary_value": stat_val, "gain": value - bound}
    return OracleResult(policy, float(value), float(stat_val), bound, n_eval, certified,
                        bool(stationary_shape), witness)


# -- continuous-time discretisation ------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscretizationReport:
    dt: float
    n_periods: int
    max_violation: float  # max over k of LHS_k - c_hat (<= 0 when feasible)
    argmax_violation_time: float
    min_I: float
    first_negative_I_time: float | None
    cdf_recursion_residual: float
    discrete_objective: float
    discrete_bound: float
    continuous_objective: float
    continuous_bound: float
    tail_mass: float

    @property
    def feasible(self) -> bool:
        return self.first_negative_I_time is None and self.max_violation <= self.dt**2

    @property
    def dominated(self) -> bool:
        return self.discrete_objective <= self.discrete_bound + 1e-4

    @property
    def passed(self) -> bool:
        return self.feasible and self.dominated

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out.update(feasible=self.feasible, dominated=self.dominated, passed=self.passed)
        return out


def discretization_certificate(rate: Callable, c, I_bar, dt: float, horizon: float,
                               rho: DiscountFunction | None = None, Vstar: float = 1.0,
                               substeps: int = 20, I_tol: float = 1e-9) -> DiscretizationReport:
    """Map a continuous stopping-rate path to a discrete relaxed policy and audit it.

    Period ``k`` covers ``[(k-1) dt, k dt)``: its stop probability is
    ``1 - exp(-int p)`` over the period, its banked information is the
    continuous ``I`` at the period start, its discount is ``rho`` there,
    and capacity per period is ``c dt``. The continuous ``I`` solves
    ``I' = c - (I_bar - I) p`` from ``I(0) = 0`` and must stay nonnegative.
    """
    _check_params(c, I_bar)
    rho = _default_rho() if rho is None else rho
    n = int(round(horizon / dt))
    m = int(substeps)
    tf = np.linspace(0.0, n * dt, n * m + 1)
    pf, Lam, I_f = _banked_path(rate, c, I_bar, tf)

    Lk = Lam[::m]  # at period boundaries 0, dt, ..., n dt
    Ik = I_f[::m]
    p_hat = -np.expm1(-np.diff(Lk))
    P_hat = -np.expm1(-Lk)  # P_hat[k] = P after period k
    c_hat = c * dt
    lhs = (I_bar - Ik[:-1]) * p_hat + (Ik[1:] - Ik[:-1]) * (1.0 - p_hat)
    viol = lhs - c_hat
    kmax = int(np.argmax(viol))
    recursion = P_hat[1:] - (P_hat[:-1] + (1.0 - P_hat[:-1]) * p_hat)
    neg = np.nonzero(I_f < -I_tol)[0]

    t_start = np.arange(n) * dt
    rho_hat = np.asarray(rho(t_start))
    disc_obj = float(np.sum(rho_hat * (1.0 - P_hat[:-1]) * p_hat) * Vstar)
    q_hat = min(c_hat / I_bar, 1.0)
    disc_bound = float(np.sum(rho_hat * q_hat * (1.0 - q_hat) ** np.arange(n)) * Vstar)
    cont_obj = float(np.trapezoid(np.asarray(rho(tf)) * pf * np.exp(-Lam), tf) * Vstar)
    cont_bound = closed_form_value(c, I_bar, Vstar, rho, mode="continuous")
    return DiscretizationReport(
        dt=dt, n_periods=n,
        max_violation=float(viol[kmax]), argmax_violation_time=float(kmax * dt),
        min_I=float(I_f.min()),
        first_negative_I_time=float(tf[neg[0]]) if neg.size else None,
        cdf_recursion_residual=float(np.max(np.abs(recursion))),
        discrete_objective=disc_obj, discrete_bound=disc_bound,
        continuous_objective=cont_obj, continuous_bound=float(cont_bound),
        tail_mass=float(np.exp(-Lk[-1])),
    )


def _banked_path(rate: Callable, c, I_bar, tf: np.ndarray):
    pf = np.asarray(rate(tf), dtype=float) * np.ones_like(tf)
    if np.any(pf < 0) or not np.all(np.isfinite(pf)):
        raise ValueError("stopping rate must be finite and nonnegative")
    h = np.diff(tf)
    Lam = np.concatenate([[0.0], np.cumsum(0.5 * h * (pf[1:] + pf[:-1]))])
    # I = e^Lam * int e^-Lam (c - I_bar p)
    integrand = np.exp(-Lam) * (c - I_bar * pf)
    J = np.concatenate([[0.0], np.cumsum(0.5 * h * (integrand[1:] + integrand[:-1]))])
    return pf, Lam, np.exp(Lam) * J


def banked_information(rate: Callable, c, I_bar, t: float, n: int = 200001) -> float:
    """Continuous banked information ``I(t)`` when capacity binds under stopping rate ``rate``."""
    _check_params(c, I_bar)
    tf = np.linspace(0.0, t, n)
    return float(_banked_path(rate, c, I_bar, tf)[2][-1])


def audit_rate_paths(c, I_bar, tail: float = 1e-7) -> dict:
    """Three feasible stopping-rate paths with horizons where survival falls below ``tail``.

    ``stationary``: ``p = c / I_bar``. ``ramp``: ``p = 2 q t`` on [0, 1], then the
    rate that holds the banked stock fixed. ``bank_then_spend``: the rate that
    makes banked information follow ``(c / 2) t e^-t``.

    Banked information obeys ``I' = p I + (c - I_bar p)``, which amplifies any
    error at rate ``p``; paths whose ``I`` drifts off (or past ``I_bar``) are
    not realisable, so the audit uses only paths with a bounded ``I``.
    """
    _check_params(c, I_bar)
    q = c / I_bar
    log_tail = -math.log(tail)
    I1 = banked_information(lambda t: 2 * q * t, c, I_bar, 1.0)
    hold = c / (I_bar - I1)
    a = c / 2

    def bank(t):
        return a * t * np.exp(-t)

    def bank_rate(t):
        return (c - a * (1 - t) * np.exp(-t)) / (I_bar - bank(t))

    return {
        "stationary": (lambda t: q + 0 * np.asarray(t, dtype=float), log_tail / q),
        "ramp": (lambda t: np.where(np.asarray(t) < 1.0, 2 * q * np.asarray(t), hold),
                 1.0 + (log_tail - q) / hold),
        "bank_then_spend": (bank_rate, log_tail / q + 2.0),
    }


def _default_rho() -> DiscountFunction:
    from .discount import exponential
    return exponential(1.0)


# -- convex discount via truncated-linear pieces --------------------------------

@dataclass(frozen=True, eq=False)
class ReductionReport:
    T: int
    eps: float
    direct: float
    piece_sum: float
    weighted_tail: float
    tail_ok: bool
    n_pieces: int
    pieces: tuple

    @property
    def gap(self) -> float:
        return abs(self.direct - self.piece_sum)

    @property
    def passed(self) -> bool:
        return self.gap <= 2 * self.eps

    def to_json(self) -> dict:
        return {"T": self.T, "eps": self.eps, "direct": self.direct,
                "piece_sum": self.piece_sum, "gap": self.gap,
                "weighted_tail": self.weighted_tail, "tail_ok": self.tail_ok,
                "n_pieces": self.n_pieces, "passed": self.passed,
                "pieces": [vars(p) for p in self.pieces]}


def _piece_value(c, I_bar, Vstar, piece: LinearPiece) -> float:
    end = piece.zero_crossing
    H = int(math.ceil(end)) + 1 if math.isfinite(end) else None
    return closed_form_value(c, I_bar, Vstar, piece, horizon=H)


def reduction_horizon(rho: Callable, c, I_bar, Vstar: float = 1.0,
                      eps: float = DEFAULT_EPS, max_T: int = 10**5) -> int:
    """Smallest even ``T`` whose stationary-weighted tail ``sum_{t>=T} rho_t w_t`` is below ``eps``."""
    q = min(c / I_bar, 1.0)
    H = _auto_horizon(q)
    t = np.arange(1, H + 1, dtype=float)
    w = np.asarray(rho(t)) * q * np.exp((t - 1) * math.log1p(-q)) * Vstar if q < 1 else \
        np.where(t == 1, np.asarray(rho(t)), 0.0) * Vstar
    tail = np.cumsum(w[::-1])[::-1]  # tail[i] = sum_{t >= i+1}
    for T in range(2, max_T + 1, 2):
        if T - 1 >= tail.size or tail[T - 1] < eps:
            return T
    raise ValueError("no horizon within max_T brings the weighted tail below eps")


def convex_reduction(rho: DiscountFunction, c, I_bar, Vstar: float = 1.0,
                     eps: float = DEFAULT_EPS, T: int | None = None) -> ReductionReport:
    """Compare the stationary value under ``rho`` with the sum over its linear pieces."""
    _check_params(c, I_bar)
    T = reduction_horizon(rho, c, I_bar, Vstar, eps) if T is None else T
    dec = decompose_truncated_linear(rho, T, eps)
    direct = closed_form_value(c, I_bar, Vstar, rho)
    pieces = sum(_piece_value(c, I_bar, Vstar, pc) for pc in dec.pieces)
    q = min(c / I_bar, 1.0)
    weighted_tail = direct - closed_form_value(c, I_bar, Vstar, rho, horizon=T - 1) \
        if q < 1 else 0.0
    return ReductionReport(T, eps, direct, float(pieces), float(weighted_tail),
                           dec.tail_ok, len(dec.pieces), dec.pieces)
