"""Pure accumulation, Gaussian and Poisson learning toward a fixed target."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .discount import DiscountFunction, expected_discount
from .fpt import FptProblem, fpt_series
from .measure import (DecisionUtility, PosteriorLottery, UncertaintyMeasure,
                      bayes_plausible, full_info_value, info_cost)
from .timedist import DecisionTimeDistribution

KINDS = ("pure_accumulation", "gaussian", "poisson")
GRID_POINTS = 10_001
PATH_START_OFFSET = 1e-9


class UnsupportedConfiguration(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StrategySpec:
    kind: str
    c: float
    H: UncertaintyMeasure
    target: PosteriorLottery
    F: DecisionUtility = field(default_factory=DecisionUtility.binary_match)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.c <= 0:
            raise ValueError("capacity must be positive")
        if not bayes_plausible(self.target):
            raise ValueError("target lottery is not Bayes plausible")
        if self.I_bar <= 0:
            raise ValueError("target carries no information (zero cost)")

    @property
    def I_bar(self) -> float:
        return info_cost(self.target, self.H)

    @property
    def Vstar(self) -> float:
        return full_info_value(self.target, self.F)

    def with_kind(self, kind: str) -> "StrategySpec":
        return StrategySpec(kind, self.c, self.H, self.target, self.F)


@dataclass(frozen=True, eq=False)
class StrategyOutcome:
    kind: str
    time_dist: DecisionTimeDistribution
    Vstar: float
    I_bar: float
    c: float
    extras: dict = field(default_factory=dict)

    def value(self, rho: DiscountFunction) -> float:
        return self.Vstar * expected_discount(rho, self.time_dist)

    def mean_time(self) -> float:
        return self.time_dist.mean()

    def to_json(self) -> dict:
        return {"kind": self.kind, "Vstar": self.Vstar, "I_bar": self.I_bar, "c": self.c,
                "mean_time": self.mean_time(), "time_dist": self.time_dist.to_json()}


def _is_binary(spec: StrategySpec) -> bool:
    return spec.target.n_states == 2


def _symmetric_atoms(spec: StrategySpec):
    """Return ``(lo, hi)`` when the target has two atoms equidistant from the prior."""
    if not _is_binary(spec):
        return None
    post = spec.target.posteriors[spec.target.probs > 0][:, 1]
    mu = spec.target.prior[1]
    if post.size != 2:
        return None
    lo, hi = sorted(post)
    if abs((mu - lo) - (hi - mu)) > 1e-12 or not lo < mu < hi:
        return None
    return float(lo), float(hi)


def belief_path_accumulation(c: float, t):
    """Upper belief branch ``(1 + sqrt(c t)) / 2`` for the symmetric quadratic case."""
    return 0.5 * (1.0 + np.sqrt(c * np.asarray(t, dtype=float)))


def _accumulation_path(spec: StrategySpec, T: float, n: int):
    # d mu / dt = c / (-H'(mu)) with H' = -8 (mu - 1/2) on the upper branch
    c = spec.c
    t_eval = np.linspace(0.0, T, n)
    sol = solve_ivp(lambda t, m: c / (8.0 * (m - 0.5)), (0.0, T),
                    [0.5 + PATH_START_OFFSET], t_eval=t_eval, rtol=1e-11, atol=1e-13,
                    method="LSODA")
    mu = np.minimum(sol.y[0], 1.0)
    return t_eval, mu, float(np.max(np.abs(mu - belief_path_accumulation(c, t_eval))))


def pure_accumulation(spec: StrategySpec, n: int = GRID_POINTS) -> StrategyOutcome:
    """All capacity goes into banking; the target is released at ``I_bar / c``."""
    T = spec.I_bar / spec.c
    dist = DecisionTimeDistribution.deterministic(T, horizon=10 * T, n=n)
    extras = {"decision_time": T}
    full = (_is_binary(spec) and spec.H.name == "quadratic"
            and abs(spec.target.prior[1] - 0.5) < 1e-12 and _symmetric_atoms(spec) == (0.0, 1.0))
    if full:
        t, mu, err = _accumulation_path(spec, T, 1001)
        extras.update(path_t=t, path_mu=mu, path_error=err)
    else:
        extras["path_note"] = ("belief path only available for the symmetric binary "
                               "full-revelation target with quadratic H")
    return StrategyOutcome("pure_accumulation", dist, spec.Vstar, spec.I_bar, spec.c, extras)


def poisson(spec: StrategySpec, n: int = GRID_POINTS) -> StrategyOutcome:
    """Whole target revealed at the first arrival of a rate ``c / I_bar`` process."""
    lam = spec.c / spec.I_bar
    # grid reaches survival 1e-12 so a written CDF keeps the mean to ~1e-7
    dist = DecisionTimeDistribution.exponential(lam, horizon=math.log(1e12) / lam, n=2 * n)
    return StrategyOutcome("poisson", dist, spec.Vstar, spec.I_bar, spec.c, {"rate": lam})


def gaussian_sigma2(spec: StrategySpec) -> float:
    """Diffusion variance that spends capacity exactly: ``2 c / (-H'')``."""
    return 2.0 * spec.c / -spec.H.second_derivative(spec.target.prior[1])


def gaussian_problem(spec: StrategySpec, horizon: float | None = None,
                     dt: float | None = None) -> FptProblem:
    if not _is_binary(spec):
        raise UnsupportedConfiguration("Gaussian learning needs a binary state")
    if spec.H.name != "quadratic":
        raise UnsupportedConfiguration(
            "Gaussian learning needs quadratic H: only then is -H'' constant, so a "
            "constant volatility spends capacity exactly at every belief")
    atoms = _symmetric_atoms(spec)
    if atoms is None:
        raise UnsupportedConfiguration(
            "Gaussian learning needs two target posteriors placed symmetrically "
            "around the prior (asymmetric targets are not supported)")
    return FptProblem(start=float(spec.target.prior[1]), lo=atoms[0], hi=atoms[1],
                      sigma2=gaussian_sigma2(spec), horizon=horizon, dt=dt)


def gaussian(spec: StrategySpec, horizon: float | None = None,
             dt: float | None = None) -> StrategyOutcome:
    """Belief diffuses without drift until it reaches a target posterior."""
    problem = gaussian_problem(spec, horizon, dt)
    return StrategyOutcome("gaussian", fpt_series(problem), spec.Vstar, spec.I_bar, spec.c,
                           {"sigma2": problem.sigma2, "problem": problem})


def gaussian_value_analytic(mu, rate: float = 1.0, sigma2: float = 0.25):
    """Expected discounted payoff of Gaussian learning from belief ``mu`` (barriers 0, 1).

    Solves ``rate V = (sigma2 / 2) V''`` with ``V(0) = V(1) = 1``.
    """
    k = math.sqrt(2.0 * rate / sigma2)
    x = np.asarray(mu, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("belief must lie in [0, 1]")
    out = np.cosh(k * (x - 0.5)) / math.cosh(k / 2)
    return float(out) if out.ndim == 0 else out


def run(spec: StrategySpec, **kw) -> StrategyOutcome:
    return {"pure_accumulation": pure_accumulation, "gaussian": gaussian,
            "poisson": poisson}[spec.kind](spec, **kw)
