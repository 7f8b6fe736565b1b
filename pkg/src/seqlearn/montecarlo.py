"""Path simulation of Poisson and Gaussian learning with statistical audits.

Paths are generated in fixed-size blocks; block ``b`` draws from a stream
seeded by ``(seed, b)``, so results do not depend on how blocks are
scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import stats

from .fpt import FptProblem, survival_series
from .measure import PosteriorLottery, UncertaintyMeasure
from .strategies import StrategySpec

BLOCK = 4096
Z_BAND = 3.0


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    dt: float = 1e-3
    seed: int = 0
    horizon: float | None = None  # None: run until every path decides (Poisson only)
    snapshot_times: tuple = ()
    bridge: bool = True
    block_size: int = BLOCK

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "snapshot_times",
                           tuple(sorted(float(t) for t in self.snapshot_times)))

    def blocks(self):
        for b, start in enumerate(range(0, self.n_paths, self.block_size)):
            yield b, start, min(self.block_size, self.n_paths - start)

    def block_seed(self, b: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=(b,))


@dataclass(frozen=True, eq=False)
class PathBundle:
    """Simulated paths. ``decision_time`` is NaN for paths censored at the horizon."""

    kind: str
    prior: np.ndarray
    decision_time: np.ndarray
    terminal: np.ndarray  # (n, n_states) belief when the path stopped (or at the horizon)
    snapshots: dict = field(default_factory=dict)  # t -> (n, n_states) beliefs
    horizon: float = math.inf
    meta: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.decision_time.size

    @property
    def decided(self) -> np.ndarray:
        return ~np.isnan(self.decision_time)

    @property
    def n_censored(self) -> int:
        return int(np.count_nonzero(~self.decided))

    def decided_times(self) -> np.ndarray:
        return self.decision_time[self.decided]

    def mean_time(self):
        """Mean over decided paths and its standard error."""
        x = self.decided_times()
        se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        return float(x.mean()), se

    def summary(self) -> dict:
        m, se = self.mean_time()
        return {"kind": self.kind, "n_paths": self.n_paths, "n_censored": self.n_censored,
                "censored_fraction": self.n_censored / self.n_paths,
                "mean_time": m, "mean_time_se": se, "horizon": self.horizon, **self.meta}


# -- Poisson -------------------------------------------------------------------

def simulate_jumps(target: PosteriorLottery, rate: float, cfg: SimConfig,
                   kind: str = "poisson") -> PathBundle:
    """Belief sits at the prior until an exponential arrival, then jumps to a draw from ``target``."""
    n = cfg.n_paths
    times = np.empty(n)
    atom = np.empty(n, dtype=np.int64)
    for b, start, size in cfg.blocks():
        rng = np.random.Generator(np.random.PCG64(cfg.block_seed(b)))
        times[start:start + size] = rng.exponential(1.0 / rate, size)
        atom[start:start + size] = rng.choice(target.probs.size, size=size, p=target.probs)
    horizon = math.inf if cfg.horizon is None else cfg.horizon
    censored = times > horizon
    post = target.posteriors[atom]
    terminal = np.where(censored[:, None], target.prior[None, :], post)
    snaps = {t: np.where((times <= t)[:, None], post, target.prior[None, :])
             for t in cfg.snapshot_times}
    return PathBundle(kind, target.prior, np.where(censored, np.nan, times), terminal, snaps,
                      horizon, {"rate": rate, "seed": cfg.seed})


def simulate_poisson(spec: StrategySpec, cfg: SimConfig) -> PathBundle:
    return simulate_jumps(spec.target, spec.c / spec.I_bar, cfg)


# -- Gaussian -------------------------------------------------------------------

@numba.njit(cache=True)
def _advance(x, Z, U, lo, hi, sd, var_dt, bridge, snap_step, snap_col, snaps):
    """Step every live path through one chunk of increments.

    Returns the 1-based step within the chunk at which each path was
    absorbed (0 if still alive). Snapshot ``snap_col[j]`` is taken after
    local step ``snap_step[j]``.
    """
    n, m = Z.shape
    hit_at = np.zeros(n, dtype=np.int64)
    for i in range(n):
        xi = x[i]
        j = 0
        for k in range(m):
            y = xi + sd * Z[i, k]
            hit = False
            if y <= lo:
                hit, y = True, lo
            elif y >= hi:
                hit, y = True, hi
            elif bridge:
                # Brownian bridge: chance the path touched a barrier inside the step
                e_lo = 2.0 * (xi - lo) * (y - lo) / var_dt
                e_hi = 2.0 * (hi - xi) * (hi - y) / var_dt
                if e_lo < 40.0 or e_hi < 40.0:
                    p_lo = math.exp(-e_lo)
                    if U[i, k] < p_lo:
                        hit, y = True, lo
                    elif U[i, k] < p_lo + math.exp(-e_hi):
                        hit, y = True, hi
            xi = y
            while j < snap_step.size and snap_step[j] == k + 1:
                snaps[i, snap_col[j]] = xi
                j += 1
            if hit:
                hit_at[i] = k + 1
                break
        x[i] = xi
    return hit_at


def simulate_gaussian(problem: FptProblem, cfg: SimConfig, chunk: int = 512) -> PathBundle:
    """Euler-Maruyama belief paths absorbed at the interval ends.

    With ``cfg.bridge`` each step also absorbs with the Brownian-bridge
    probability of having touched a barrier in between. Increments come
    in chunks of ``chunk`` steps for the paths still alive.
    """
    horizon = problem.horizon if cfg.horizon is None else cfg.horizon
    n_steps = int(math.ceil(horizon / cfg.dt - 1e-9))
    snap_steps = np.array([int(round(t / cfg.dt)) for t in cfg.snapshot_times], dtype=np.int64)
    n = cfg.n_paths
    hit_step = np.zeros(n, dtype=np.int64)  # 0 = never absorbed
    final = np.empty(n)
    snaps = np.full((n, snap_steps.size), problem.start)
    sd = math.sqrt(problem.sigma2 * cfg.dt)
    var_dt = problem.sigma2 * cfg.dt
    for b, start, size in cfg.blocks():
        rng = np.random.Generator(np.random.PCG64(cfg.block_seed(b)))
        live = np.arange(start, start + size)
        x = np.full(size, problem.start)
        done = 0
        while live.size and done < n_steps:
            m = min(chunk, n_steps - done)
            Z = rng.standard_normal((live.size, m))
            U = rng.random((live.size, m)) if cfg.bridge else np.empty((0, 0))
            sel = (snap_steps > done) & (snap_steps <= done + m)
            cols = np.nonzero(sel)[0]
            local = np.ascontiguousarray(snaps[live])
            hit = _advance(x, Z, U, problem.lo, problem.hi, sd, var_dt, cfg.bridge,
                           snap_steps[cols] - done, cols, local)
            snaps[live] = local
            absorbed = hit > 0
            hit_step[live[absorbed]] = done + hit[absorbed]
            final[live[absorbed]] = x[absorbed]
            live, x = live[~absorbed], x[~absorbed]
            done += m
        final[live] = x
    # absorbed paths stay at their barrier in later snapshots
    for j, s in enumerate(snap_steps):
        after = (hit_step > 0) & (hit_step <= s)
        snaps[after, j] = final[after]
    times = np.where(hit_step > 0, hit_step * cfg.dt, np.nan)
    to_belief = lambda v: np.stack([1.0 - v, v], axis=-1)
    snap_dict = {t: to_belief(snaps[:, j]) for j, t in enumerate(cfg.snapshot_times)}
    prior = np.array([1.0 - problem.start, problem.start])
    return PathBundle("gaussian", prior, times, to_belief(final), snap_dict, horizon,
                      {"sigma2": problem.sigma2, "dt": cfg.dt, "bridge": cfg.bridge,
                       "seed": cfg.seed, "lo": problem.lo, "hi": problem.hi})


# -- audits -----------------------------------------------------------------------

def _verdict(est, target, se):
    gap = abs(est - target)
    return bool(gap <= Z_BAND * se) if se > 0 else bool(gap <= 1e-12)


def martingale_residual(bundle: PathBundle, checkpoints) -> list:
    """``|mean belief at t - prior|`` per checkpoint (worst state coordinate)."""
    out = []
    for t in checkpoints:
        b = bundle.snapshots[_snap_key(bundle, t)]
        n = b.shape[0]
        resid = np.abs(b.mean(axis=0) - bundle.prior)
        se = b.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(resid)
        i = int(np.argmax(resid - Z_BAND * se))
        out.append({"t": t, "residual": float(resid[i]), "stderr": float(se[i]),
                    "pass": _verdict(resid[i], 0.0, se[i])})
    return out


def capacity_audit(bundle: PathBundle, H: UncertaintyMeasure, c: float, checkpoints,
                   h: float = 0.01) -> list:
    """Flow uncertainty reduction ``E[H(mu_t) - H(mu_{t+h})] / h`` among paths undecided at ``t``.

    Needs snapshots at every ``t`` and ``t + h`` (see :func:`audit_times`).
    """
    out = []
    for t0 in sorted(checkpoints):
        t1 = _snap_key(bundle, t0 + h)
        alive = ~(bundle.decision_time <= t0)  # censored (NaN) paths are alive
        drop = (np.asarray(H(bundle.snapshots[_snap_key(bundle, t0)][alive]))
                - np.asarray(H(bundle.snapshots[t1][alive]))) / h
        m = int(drop.size)
        est = float(drop.mean()) if m else 0.0
        se = float(drop.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
        out.append({"t": t0, "h": h, "n_alive": m, "estimate": est, "stderr": se,
                    "capacity": c, "pass": _verdict(est, c, se)})
    return out


def _snap_key(bundle: PathBundle, t: float) -> float:
    for key in bundle.snapshots:
        if abs(key - t) < 1e-9:
            return key
    raise KeyError(f"no snapshot at t={t}; add it to SimConfig.snapshot_times")


def audit_times(checkpoints, h: float = 0.01) -> tuple:
    """Snapshot times needed to audit ``checkpoints`` with step ``h``."""
    return tuple(sorted({round(float(t), 12) for t in checkpoints}
                        | {round(float(t) + h, 12) for t in checkpoints}))


def ks_test(bundle: PathBundle, cdf, level: float = 0.01) -> dict:
    """Kolmogorov-Smirnov test of decided times against ``cdf`` (conditioned on the horizon)."""
    x = bundle.decided_times()
    if bundle.n_censored:
        top = float(cdf(np.array([bundle.horizon]))[0])
        law = lambda t: np.asarray(cdf(t)) / top
    else:
        law = cdf
    res = stats.kstest(x, law)
    crit = stats.kstwo.ppf(1 - level, x.size)
    return {"statistic": float(res.statistic), "pvalue": float(res.pvalue),
            "critical_value": float(crit), "level": level, "n": int(x.size),
            "pass": bool(res.statistic < crit)}


def exponential_cdf(rate: float):
    return lambda t: -np.expm1(-rate * np.asarray(t, dtype=float))


def series_cdf(problem: FptProblem):
    return lambda t: 1.0 - survival_series(problem, np.asarray(t, dtype=float))


def terminal_frequencies(bundle: PathBundle, target: PosteriorLottery) -> list:
    """Observed frequency of each target posterior among decided paths against its probability."""
    term = bundle.terminal[bundle.decided]
    n = term.shape[0]
    rows = []
    for nu, p in zip(target.posteriors, target.probs):
        hit = np.all(np.abs(term - nu) < 1e-12, axis=1)
        f = float(hit.mean()) if n else 0.0
        se = math.sqrt(p * (1 - p) / n) if n else 0.0
        rows.append({"posterior": nu.tolist(), "prob": float(p), "frequency": f,
                     "stderr": se, "pass": _verdict(f, p, se)})
    return rows
