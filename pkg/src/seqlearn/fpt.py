"""First passage of a driftless diffusion out of an interval.

Two independent solvers for the same absorbing heat equation: a sine
series (spectral, with a rigorous truncation bound) and a theta-scheme
finite-difference solve.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.integrate import simpson
from scipy.sparse.linalg import splu

from .timedist import PROPER_TOL, DecisionTimeDistribution, TruncationWarning

SERIES_TOL = 1e-12
MIN_TERMS = 5
MAX_TERMS = 200_001
MIN_SPACE_POINTS = 201


class StabilityError(ValueError):
    pass


@dataclass(frozen=True)
class FptProblem:
    """Diffusion ``dX = sigma dB`` from ``start`` until it leaves ``(lo, hi)``.

    ``horizon`` defaults to the time at which survival drops below 1e-12;
    ``dt`` is the spacing of the output time grid.
    """

    start: float = 0.5
    lo: float = 0.0
    hi: float = 1.0
    sigma2: float = 0.25
    horizon: float | None = None
    dt: float | None = None

    def __post_init__(self):
        if not self.lo < self.start < self.hi:
            raise ValueError(f"need lo < start < hi, got {self.lo}, {self.start}, {self.hi}")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if self.horizon is None:
            a1 = self.sigma2 * math.pi**2 / (2 * self.length**2)
            object.__setattr__(self, "horizon", math.log(4 / math.pi / SERIES_TOL) / a1)
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.dt is None:
            object.__setattr__(self, "dt", self.horizon / 10_000)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def offset(self) -> float:
        return self.start - self.lo

    def times(self) -> np.ndarray:
        n = int(math.ceil(self.horizon / self.dt - 1e-9))
        return np.linspace(0.0, n * self.dt, n + 1)

    def mean_exact(self) -> float:
        y = self.offset
        return y * (self.length - y) / self.sigma2

    def hit_hi_exact(self) -> float:
        return self.offset / self.length


# -- series ------------------------------------------------------------------

def _n_terms(problem: FptProblem, t_min: float, coef_scale: float) -> int:
    """Modes needed so the first dropped term is below the tolerance at ``t_min``."""
    if t_min <= 0:
        return MAX_TERMS
    a = problem.sigma2 * math.pi**2 / (2 * problem.length**2)
    # coef_scale / k * exp(-a k^2 t) < tol
    k = MIN_TERMS
    while k < MAX_TERMS and coef_scale / k * math.exp(-a * k * k * t_min) >= SERIES_TOL:
        k = int(k * 1.5) + 1
    return min(k, MAX_TERMS)


def _modes(problem: FptProblem, t: np.ndarray, coef_scale: float):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pos = t[t > 0]
    K = _n_terms(problem, float(pos.min()) if pos.size else 0.0, coef_scale)
    k = np.arange(1, K + 1, dtype=float)
    a = problem.sigma2 * math.pi**2 * k * k / (2 * problem.length**2)
    return t, k, a, K


def _chunked_sum(weights: np.ndarray, a: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    step = max(1, 2_000_000 // max(a.size, 1))
    for i in range(0, t.size, step):
        tt = t[i:i + step, None]
        out[i:i + step] = np.exp(-a[None, :] * tt) @ weights
    return out


def survival_series(problem: FptProblem, t):
    """Probability of still being inside the interval at ``t``."""
    t, k, a, K = _modes(problem, t, 4 / math.pi)
    w = 2 / (k * math.pi) * (1 - (-1.0) ** k) * np.sin(k * math.pi * problem.offset / problem.length)
    S = _chunked_sum(w, a, t)
    S = np.where(t <= 0, 1.0, S)
    if K >= MAX_TERMS:
        warnings.warn("series truncated at the term cap for very small t", TruncationWarning,
                      stacklevel=2)
    return np.clip(S, 0.0, 1.0)


def density_series(problem: FptProblem, t):
    """First-passage density ``-dS/dt``."""
    t, k, a, _ = _modes(problem, t, 4 / math.pi * problem.sigma2 * math.pi**2 / problem.length**2)
    w = 2 / (k * math.pi) * (1 - (-1.0) ** k) * np.sin(k * math.pi * problem.offset / problem.length)
    f = _chunked_sum(w * a, a, t)
    return np.where(t <= 0, 0.0, np.maximum(f, 0.0))


def barrier_masses_series(problem: FptProblem, t):
    """``(absorbed at lo, absorbed at hi)`` by time ``t``."""
    t, k, a, _ = _modes(problem, t, 2 / math.pi)
    L, y = problem.length, problem.offset
    w = 2 * np.sin(k * math.pi * y / L) * (-1.0) ** (k + 1) / (k * math.pi)
    hi = np.where(t <= 0, 0.0, y / L - _chunked_sum(w, a, t))
    lo = 1.0 - survival_series(problem, t) - hi
    return np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)


def fpt_series(problem: FptProblem) -> DecisionTimeDistribution:
    t = problem.times()
    S = survival_series(problem, t)
    flags = ("short_horizon",) if S[-1] > PROPER_TOL else ()
    return DecisionTimeDistribution.numeric(t, 1.0 - S, density=density_series(problem, t),
                                            flags=flags)


# -- finite differences ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PdeSolution:
    times: np.ndarray
    x: np.ndarray
    survival: np.ndarray
    absorbed_lo: np.ndarray
    absorbed_hi: np.ndarray
    snapshots: dict  # time -> interior density on x

    def projected_hit_hi(self) -> float:
        """Mass absorbed at ``hi`` plus the eventual share of the mass still inside."""
        t_last = max(self.snapshots)
        u = self.snapshots[t_last]
        L = self.x[-1] - self.x[0]
        dx = self.x[1] - self.x[0]
        return float(self.absorbed_hi[-1] + np.sum(u * (self.x - self.x[0]) / L) * dx)

    def distribution(self) -> DecisionTimeDistribution:
        flags = ("short_horizon",) if self.survival[-1] > PROPER_TOL else ()
        return DecisionTimeDistribution.numeric(self.times, np.clip(1.0 - self.survival, 0, 1),
                                                flags=flags)


def solve_pde(problem: FptProblem, n_space: int = 401, dt: float = 1e-3, theta: float = 1.0,
              snapshot_times=()) -> PdeSolution:
    """Theta scheme for ``u_t = (sigma2 / 2) u_xx`` with zero boundary values.

    ``theta = 1`` is backward Euler (the default), ``0.5`` Crank-Nicolson,
    ``0`` explicit (guarded by the stability limit). Barrier fluxes are
    accumulated with the same theta weighting, so total mass is conserved
    to roundoff. The initial point mass sits on the nearest node(s),
    split to preserve its mean.
    """
    if n_space < MIN_SPACE_POINTS:
        raise ValueError(f"need at least {MIN_SPACE_POINTS} space points")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    D = problem.sigma2 / 2
    x = np.linspace(problem.lo, problem.hi, n_space)
    dx = x[1] - x[0]
    r = D * dt / dx**2
    if theta < 0.5 and r * (1 - 2 * theta) > 0.5:
        raise StabilityError(f"D dt / dx^2 = {r:.3g} violates the stability limit "
                             f"{0.5 / (1 - 2 * theta):.3g} for theta={theta}")
    m = n_space - 2  # interior nodes
    lap = sparse.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1], format="csc")
    eye = sparse.identity(m, format="csc")
    A = splu((eye - theta * r * lap).tocsc())
    B = (eye + (1 - theta) * r * lap).tocsr()

    u = np.zeros(m)
    pos = (problem.start - problem.lo) / dx  # fractional node index
    i0 = int(math.floor(pos))
    frac = pos - i0
    for node, wgt in ((i0, 1 - frac), (i0 + 1, frac)):
        if wgt > 0:
            if not 1 <= node <= n_space - 2:
                raise ValueError("start too close to a barrier for this grid")
            u[node - 1] += wgt / dx

    n_steps = int(math.ceil(problem.horizon / dt - 1e-9))
    times = np.arange(n_steps + 1) * dt
    surv = np.empty(n_steps + 1)
    ab_lo = np.zeros(n_steps + 1)
    ab_hi = np.zeros(n_steps + 1)
    surv[0] = u.sum() * dx
    want = sorted(float(s) for s in snapshot_times)
    snaps = {}
    snap_steps = {int(round(s / dt)): s for s in want}
    if 0 in snap_steps:
        snaps[snap_steps[0]] = u.copy()
    flux_c = D * dt / dx
    for n in range(1, n_steps + 1):
        new = A.solve(B @ u)
        ab_lo[n] = ab_lo[n - 1] + flux_c * (theta * new[0] + (1 - theta) * u[0])
        ab_hi[n] = ab_hi[n - 1] + flux_c * (theta * new[-1] + (1 - theta) * u[-1])
        u = new
        surv[n] = u.sum() * dx
        if n in snap_steps:
            snaps[snap_steps[n]] = u.copy()
    snaps[float(times[-1])] = u.copy()
    full = {t: np.concatenate([[0.0], v, [0.0]]) for t, v in snaps.items()}
    return PdeSolution(times, x, surv, ab_lo, ab_hi, full)


def fpt_pde(problem: FptProblem, n_space: int = 401, dt: float = 1e-3,
            theta: float = 1.0) -> DecisionTimeDistribution:
    return solve_pde(problem, n_space, dt, theta).distribution()


def sup_distance(d1: DecisionTimeDistribution, d2: DecisionTimeDistribution) -> float:
    """Sup-norm CDF distance on the union of both grids."""
    g = np.union1d(d1.grid, d2.grid)
    g = g[g <= min(d1.horizon, d2.horizon)]
    return float(np.max(np.abs(d1.cdf_at(g) - d2.cdf_at(g))))


# -- cross sections ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CrossSection:
    t: float
    x: np.ndarray
    density: np.ndarray  # interior density (excludes atoms)
    mass_lo: float
    mass_hi: float
    start_atom: float  # unit point mass at start when t = 0
    rule: str = "simpson"  # grid-native PDE data integrates with the plain sum

    @property
    def interior_mass(self) -> float:
        if self.rule == "sum":
            return float(np.sum(self.density) * (self.x[1] - self.x[0])) + self.start_atom
        return float(simpson(self.density, x=self.x)) + self.start_atom

    @property
    def total_mass(self) -> float:
        return self.interior_mass + self.mass_lo + self.mass_hi

    def to_rows(self):
        return [(float(a), float(b)) for a, b in zip(self.x, self.density)]


def cross_section(problem: FptProblem, t: float, n_points: int | None = None,
                  method: str = "series") -> CrossSection:
    """Belief distribution at ``t``: interior density plus mass absorbed at each barrier."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    L, y = problem.length, problem.offset
    if t == 0:
        n = n_points or 1001
        x = np.linspace(problem.lo, problem.hi, n)
        return CrossSection(0.0, x, np.zeros(n), 0.0, 0.0, 1.0)
    if method == "pde":
        sol = solve_pde(problem, n_space=max(n_points or 401, MIN_SPACE_POINTS),
                        dt=min(1e-3, t / 10), snapshot_times=[t])
        k = int(round(t / (sol.times[1] - sol.times[0])))
        return CrossSection(t, sol.x, sol.snapshots[min(sol.snapshots, key=lambda s: abs(s - t))],
                            float(sol.absorbed_lo[k]), float(sol.absorbed_hi[k]), 0.0, "sum")
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    # resolve the bulk of width sigma sqrt(t) with ~40 points
    n = n_points or int(min(max(1001, 40 * L / math.sqrt(problem.sigma2 * t)), 200_001))
    n += (n + 1) % 2  # odd count for Simpson
    x = np.linspace(problem.lo, problem.hi, n)
    K = _n_terms(problem, t, 2 / L)
    k = np.arange(1, K + 1, dtype=float)
    a = problem.sigma2 * math.pi**2 * k * k / (2 * L**2)
    coef = 2 / L * np.sin(k * math.pi * y / L) * np.exp(-a * t)
    dens = np.sin(np.outer((x - problem.lo) / L, k * math.pi)) @ coef
    dens[0] = dens[-1] = 0.0
    lo, hi = barrier_masses_series(problem, t)
    return CrossSection(t, x, dens, float(lo[0]), float(hi[0]), 0.0)
