"""Decision-time distributions: means, integrated CDFs and MPS verdicts."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PROPER_TOL = 1e-6
SIGN_TOL = 1e-6
OVERSAMPLE = 10


class TruncationWarning(UserWarning):
    """Probability mass or discount weight lies beyond the computed horizon."""


@dataclass(frozen=True, eq=False)
class DecisionTimeDistribution:
    """CDF of a decision time on a grid, plus an analytic tag when one exists.

    ``kind`` is one of ``deterministic``, ``exponential``, ``geometric``,
    ``empirical`` or ``numeric``. Analytic kinds keep their parameters in
    ``params`` and every query uses the exact formulas; the grid is only
    for plotting and for building comparison grids.
    """

    grid: np.ndarray
    cdf: np.ndarray
    kind: str = "numeric"
    params: dict = field(default_factory=dict)
    samples: np.ndarray | None = None
    n_total: int | None = None
    density: np.ndarray | None = None
    flags: tuple = ()

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        F = np.asarray(self.cdf, dtype=float)
        if g.ndim != 1 or g.shape != F.shape or g.size == 0:
            raise ValueError("grid and cdf must be 1-d arrays of equal length")
        if g[0] < 0 or np.any(np.diff(g) < 0):
            raise ValueError("time grid must be nonnegative and nondecreasing")
        if np.any(np.diff(F) < -1e-12) or F.min() < -1e-12 or F.max() > 1 + 1e-12:
            raise ValueError("cdf must be nondecreasing with values in [0, 1]")
        flags = tuple(self.flags)
        if F[-1] < 1 - PROPER_TOL and "improper" not in flags:
            flags = flags + ("improper",)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "cdf", np.clip(F, 0.0, 1.0))
        object.__setattr__(self, "flags", flags)

    # -- constructors -----------------------------------------------------

    @classmethod
    def deterministic(cls, t0: float, horizon: float | None = None, n: int = 1001):
        horizon = max(2.0 * t0, 1.0) if horizon is None else horizon
        g = np.union1d(np.linspace(0.0, horizon, n), [t0])
        return cls(g, (g >= t0).astype(float), "deterministic", {"time": float(t0)})

    @classmethod
    def exponential(cls, rate: float, horizon: float | None = None, n: int = 10001):
        if rate <= 0:
            raise ValueError("rate must be positive")
        horizon = 10.0 / rate if horizon is None else horizon
        g = np.linspace(0.0, horizon, n)
        return cls(g, -np.expm1(-rate * g), "exponential", {"rate": float(rate)},
                   density=rate * np.exp(-rate * g))

    @classmethod
    def geometric(cls, q: float, horizon: int | None = None):
        """Discrete law ``P(T <= t) = 1 - (1 - q)^t`` on ``t = 0, 1, 2, ...``."""
        if not 0 < q <= 1:
            raise ValueError("q must lie in (0, 1]")
        horizon = int(np.ceil(10.0 / q)) if horizon is None else int(horizon)
        g = np.arange(horizon + 1, dtype=float)
        return cls(g, 1.0 - (1.0 - q) ** g, "geometric", {"q": float(q)})

    @classmethod
    def empirical(cls, times, n_censored: int = 0, horizon: float | None = None):
        """ECDF of decided times; censored paths count in the denominator only."""
        x = np.sort(np.asarray(times, dtype=float))
        n = x.size + int(n_censored)
        if n == 0:
            raise ValueError("no samples")
        if x.size == 0:
            g, F = np.array([0.0]), np.array([0.0])
        else:
            g = np.concatenate([[0.0], x])
            F = np.concatenate([[0.0], np.arange(1, x.size + 1) / n])
        if horizon is not None and horizon > g[-1]:
            g = np.append(g, horizon)
            F = np.append(F, F[-1])
        flags = ("censored",) if n_censored else ()
        return cls(g, F, "empirical", {"n_censored": int(n_censored)},
                   samples=x, n_total=n, flags=flags)

    @classmethod
    def numeric(cls, grid, cdf, density=None, flags=()):
        return cls(grid, cdf, "numeric", density=density, flags=tuple(flags))

    # -- queries ----------------------------------------------------------

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    @property
    def stepwise(self) -> bool:
        return self.kind in ("deterministic", "geometric", "empirical")

    def cdf_at(self, t):
        t = np.asarray(t, dtype=float)
        k, p = self.kind, self.params
        if k == "deterministic":
            return (t >= p["time"]).astype(float)
        if k == "exponential":
            return -np.expm1(-p["rate"] * np.maximum(t, 0.0))
        if k == "geometric":
            return 1.0 - (1.0 - p["q"]) ** np.floor(np.maximum(t, 0.0))
        if k == "empirical":
            return np.searchsorted(self.samples, t, side="right") / self.n_total
        return np.interp(t, self.grid, self.cdf, left=0.0, right=self.cdf[-1])

    def mean(self) -> float:
        """Expected decision time, ``int (1 - F)``."""
        k, p = self.kind, self.params
        if k == "deterministic":
            return p["time"]
        if k == "exponential":
            return 1.0 / p["rate"]
        if k == "geometric":
            return 1.0 / p["q"]
        if "improper" in self.flags or "censored" in self.flags:
            warnings.warn(f"{k} distribution does not reach 1 on its grid; mean is "
                          "computed over the decided mass only", TruncationWarning,
                          stacklevel=2)
        if k == "empirical":
            return float(self.samples.mean())
        return float(np.trapezoid(1.0 - self.cdf, self.grid))

    def mean_stderr(self) -> float:
        if self.kind != "empirical":
            return 0.0
        x = self.samples
        return float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0

    def integrated_cdf(self, s):
        """``int_0^s F(t) dt`` (vectorised over ``s``)."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("s must be nonnegative")
        k, p = self.kind, self.params
        if k == "deterministic":
            return np.maximum(s - p["time"], 0.0)
        if k == "exponential":
            lam = p["rate"]
            return s + np.expm1(-lam * s) / lam
        if k == "geometric":
            q = p["q"]
            m = np.floor(s)
            full = m - (1.0 - (1.0 - q) ** m) / q
            return full + (1.0 - (1.0 - q) ** m) * (s - m)
        if k == "empirical":
            return self._empirical_moments(s)[0]
        return _integrate_piecewise_linear(self.grid, self.cdf, s)

    def integrated_cdf_stderr(self, s):
        """Sampling standard error of the integrated ECDF (0 for exact laws)."""
        s = np.asarray(s, dtype=float)
        if self.kind != "empirical":
            return np.zeros_like(s)
        m1, m2 = self._empirical_moments(s)
        n = self.n_total
        var = np.maximum(m2 - m1 * m1, 0.0)
        return np.sqrt(var / max(n - 1, 1))

    def _empirical_moments(self, s):
        # first and second moments of (s - X)^+ under the ECDF
        x = self.samples
        c1 = np.concatenate([[0.0], np.cumsum(x)])
        c2 = np.concatenate([[0.0], np.cumsum(x * x)])
        kk = np.searchsorted(x, s, side="right")
        n = self.n_total
        m1 = (kk * s - c1[kk]) / n
        m2 = (kk * s * s - 2 * s * c1[kk] + c2[kk]) / n
        return m1, m2

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params, "flags": list(self.flags),
                "horizon": self.horizon}


def _integrate_piecewise_linear(grid, F, s):
    g, F = np.asarray(grid), np.asarray(F)
    s = np.asarray(s, dtype=float)
    if g.size == 1:
        return np.maximum(s - g[0], 0.0) * F[0]
    dg = np.diff(g)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (F[1:] + F[:-1]) * dg)])
    with np.errstate(invalid="ignore", divide="ignore"):
        slopes = np.append(np.where(dg > 0, np.diff(F) / dg, 0.0), 0.0)
    i = np.clip(np.searchsorted(g, s, side="right") - 1, 0, g.size - 1)
    ds = np.maximum(s - g[i], 0.0)
    # linear inside a cell; held at the last value past the grid
    out = cum[i] + F[i] * ds + 0.5 * slopes[i] * ds * ds
    return np.where(s < g[0], 0.0, out)


def mean(d: DecisionTimeDistribution) -> float:
    return d.mean()


def integrated_cdf(d: DecisionTimeDistribution, s):
    return d.integrated_cdf(s)


@dataclass(frozen=True)
class SosdVerdict:
    verdict: str  # d2_mps_of_d1 | d1_mps_of_d2 | equal | incomparable
    max_gap: float
    argmax_s: float
    min_gap: float
    argmin_s: float
    mean_gap: float
    reason: str = ""

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "max_gap": self.max_gap, "argmax_s": self.argmax_s,
                "min_gap": self.min_gap, "argmin_s": self.argmin_s,
                "mean_gap": self.mean_gap, "reason": self.reason}


def comparison_grid(d1, d2, oversample: int = OVERSAMPLE) -> np.ndarray:
    top = max(d1.horizon, d2.horizon)
    n = oversample * max(d1.grid.size, d2.grid.size)
    return np.union1d(np.union1d(d1.grid, d2.grid), np.linspace(0.0, top, n))


def sosd_compare(d1: DecisionTimeDistribution, d2: DecisionTimeDistribution,
                 tol: float = SIGN_TOL) -> SosdVerdict:
    """Mean-preserving-spread verdict from the sign of ``int F2 - int F1``.

    A nonnegative gap everywhere means ``d2`` is riskier (an MPS of ``d1``).
    Empirical inputs widen the sign band by three standard errors.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        m1, m2 = d1.mean(), d2.mean()
    mean_band = tol + 3.0 * np.hypot(d1.mean_stderr(), d2.mean_stderr())
    s = comparison_grid(d1, d2)
    gap = d2.integrated_cdf(s) - d1.integrated_cdf(s)
    band = tol + 3.0 * np.hypot(d1.integrated_cdf_stderr(s), d2.integrated_cdf_stderr(s))
    imax, imin = int(np.argmax(gap)), int(np.argmin(gap))
    common = dict(max_gap=float(gap[imax]), argmax_s=float(s[imax]),
                  min_gap=float(gap[imin]), argmin_s=float(s[imin]),
                  mean_gap=float(m2 - m1))
    if abs(m1 - m2) > mean_band:
        return SosdVerdict("incomparable", reason=f"means differ: {m1!r} vs {m2!r}", **common)
    above = np.any(gap > band)
    below = np.any(gap < -band)
    if above and below:
        return SosdVerdict("incomparable", reason="integrated CDFs cross", **common)
    if above:
        return SosdVerdict("d2_mps_of_d1", **common)
    if below:
        return SosdVerdict("d1_mps_of_d2", **common)
    return SosdVerdict("equal", **common)


def exhaustiveness_check(d: DecisionTimeDistribution, c: float, I_bar: float,
                         tol: float = 1e-6) -> bool:
    """True when the expected decision time meets the lower bound ``I_bar / c``."""
    return abs(d.mean() - I_bar / c) <= tol


def write_csv(d: DecisionTimeDistribution, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "cdf"])
        prev = 0.0
        for t, F in zip(d.grid, d.cdf):
            if d.stepwise and F > prev:
                # left limit first, so the jump survives linear interpolation on read
                w.writerow([repr(float(t)), repr(float(prev))])
            w.writerow([repr(float(t)), repr(float(F))])
            prev = F
    return path


def read_csv(path) -> DecisionTimeDistribution:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "t" not in rows[0] or "cdf" not in rows[0]:
        raise ValueError(f"{path}: expected columns t,cdf")
    t = np.array([float(r["t"]) for r in rows])
    F = np.array([float(r["cdf"]) for r in rows])
    return DecisionTimeDistribution.numeric(t, F)
