"""Decreasing convex discount functions and their truncated-linear pieces."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .timedist import PROPER_TOL, DecisionTimeDistribution, TruncationWarning

CONVEXITY_SLACK = 1e-9
DEFAULT_EPS = 1e-6


class NonConvexDiscount(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiscountFunction:
    """A discount ``rho(t)`` for ``t >= 0`` with its time derivative.

    Build instances with the module-level factories; ``params`` holds
    what :meth:`to_json` writes back out.
    """

    kind: str
    params: dict
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    deriv: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    knots: tuple = ()  # kinks, handed to quadrature as breakpoints

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("discount evaluated at negative time")
        out = self.fn(t)
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = self.deriv(t)
        return float(out) if np.ndim(out) == 0 else out

    def to_json(self) -> dict:
        if self.kind == "mixture":
            return {"kind": "mixture", "weights": list(self.params["weights"]),
                    "components": [c.to_json() for c in self.params["components"]]}
        return {"kind": self.kind, **self.params}


def evaluate(rho: DiscountFunction, t):
    return rho(t)


def exponential(rate: float) -> DiscountFunction:
    if rate <= 0:
        raise ValueError("rate must be positive")
    return DiscountFunction("exponential", {"rate": float(rate)},
                            lambda t: np.exp(-rate * t),
                            lambda t: -rate * np.exp(-rate * t))


def hyperbolic(k: float) -> DiscountFunction:
    if k <= 0:
        raise ValueError("k must be positive")
    return DiscountFunction("hyperbolic", {"k": float(k)},
                            lambda t: 1.0 / (1.0 + k * t),
                            lambda t: -k / (1.0 + k * t) ** 2)


def truncated_linear(T: float) -> DiscountFunction:
    """``max((T - t) / T, 0)``."""
    if T <= 0:
        raise ValueError("T must be positive")
    return DiscountFunction("truncated_linear", {"T": float(T)},
                            lambda t: np.maximum((T - t) / T, 0.0),
                            lambda t: np.where(t < T, -1.0 / T, 0.0),
                            knots=(float(T),))


def constant_delay(kappa: float) -> DiscountFunction:
    """Linear delay cost ``max(1 - kappa t, 0)``; the risk-neutral knife edge."""
    return truncated_linear(1.0 / kappa)


def constant() -> DiscountFunction:
    return DiscountFunction("constant", {}, lambda t: np.ones_like(t),
                            lambda t: np.zeros_like(t))


def mixture(weights: Sequence[float], components: Sequence[DiscountFunction]) -> DiscountFunction:
    """Nonnegative combination of discounts (stays decreasing and convex)."""
    w = np.asarray(weights, dtype=float)
    comps = tuple(components)
    if w.shape != (len(comps),) or np.any(w < 0):
        raise ValueError("need one nonnegative weight per component")
    knots = tuple(sorted({k for c in comps for k in c.knots}))
    return DiscountFunction(
        "mixture", {"weights": tuple(w.tolist()), "components": comps},
        lambda t: sum(wi * c.fn(t) for wi, c in zip(w, comps)),
        lambda t: sum(wi * c.deriv(t) for wi, c in zip(w, comps)),
        knots=knots,
    )


def tabulated(times: Sequence[float], values: Sequence[float],
              check: bool = True) -> DiscountFunction:
    """Piecewise-linear discount through ``(times, values)``, flat after the last knot.

    ``check=False`` admits non-convex shapes (used for negative controls).
    """
    x = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 2:
        raise ValueError("times and values must be equal-length 1-d arrays")
    if x[0] != 0 or np.any(np.diff(x) <= 0) or np.any(y < 0):
        raise ValueError("times must start at 0 and increase; values must be >= 0")
    slopes = np.diff(y) / np.diff(x)
    if check and (np.any(slopes > CONVEXITY_SLACK)
                  or np.any(np.diff(np.append(slopes, 0.0)) < -CONVEXITY_SLACK)):
        raise NonConvexDiscount("tabulated discount is not decreasing and convex")

    def deriv(t):
        i = np.searchsorted(x, t, side="right") - 1
        return np.where(i < slopes.size, slopes[np.clip(i, 0, slopes.size - 1)], 0.0)

    return DiscountFunction(
        "tabulated",
        {"times": x.tolist(), "values": y.tolist(), "allow_nonconvex": not check},
        lambda t: np.interp(t, x, y), deriv, knots=tuple(x.tolist()),
    )


def from_json(spec: dict) -> DiscountFunction:
    kind = spec.get("kind")
    if kind == "exponential":
        return exponential(spec["rate"])
    if kind == "hyperbolic":
        return hyperbolic(spec["k"])
    if kind == "truncated_linear":
        return truncated_linear(spec["T"])
    if kind == "constant_delay":
        return constant_delay(spec["kappa"])
    if kind == "constant":
        return constant()
    if kind == "tabulated":
        return tabulated(spec["times"], spec["values"],
                         check=not spec.get("allow_nonconvex", False))
    if kind == "mixture":
        return mixture(spec["weights"], [from_json(c) for c in spec["components"]])
    raise ValueError(f"unknown discount kind {kind!r}")


def convexity_violation(rho: DiscountFunction, grid) -> float:
    """Largest breach of 'decreasing and convex' along ``grid`` (<= 0 means none)."""
    g = np.asarray(grid, dtype=float)
    v = np.asarray(rho(g))
    slopes = np.diff(v) / np.diff(g)
    worst = float(np.max(slopes))
    if slopes.size > 1:
        worst = max(worst, float(np.max(-np.diff(slopes) * np.diff(g)[1:])))
    return worst


def is_convex_decreasing(rho: DiscountFunction, grid=None,
                         slack: float = CONVEXITY_SLACK) -> bool:
    grid = np.linspace(0.0, 50.0, 5001) if grid is None else grid
    return convexity_violation(rho, grid) <= slack


def tail_sum(rho: DiscountFunction, T: int, horizon: int = 10**6) -> float:
    """``sum_{t=T}^{horizon} rho_t``, the summability check truncated at ``horizon``."""
    t = np.arange(T, horizon + 1, dtype=float)
    return float(np.sum(rho(t)))


@dataclass(frozen=True)
class LinearPiece:
    """``tau -> max(level + (tau - anchor_time) * slope, 0)``."""

    anchor_time: int
    level: float
    slope: float

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.maximum(self.level + (tau - self.anchor_time) * self.slope, 0.0)

    @property
    def zero_crossing(self) -> float:
        if self.slope == 0:
            return math.inf if self.level > 0 else float(self.anchor_time)
        return self.anchor_time - self.level / self.slope


@dataclass(frozen=True)
class Decomposition:
    pieces: tuple
    T: int
    eps: float
    tail: float  # sum_{t >= T} rho_t up to the checked horizon
    tail_ok: bool
    residual: float  # max |rho - sum(pieces)| on 1..T-1

    def reconstruct(self, tau):
        tau = np.asarray(tau, dtype=float)
        return sum((p(tau) for p in self.pieces), np.zeros_like(tau))


def decompose_truncated_linear(rho: DiscountFunction, T: int, eps: float = DEFAULT_EPS,
                               horizon: int = 10**6) -> Decomposition:
    """Split a convex discount on periods ``1..T`` into truncated-linear pieces.

    Piece ``k`` is anchored at ``T - 2k``: the line through the current
    residual at ``T - 2k - 1`` and ``T - 2k``, clipped at zero. Each step
    zeroes the residual on two more periods, so ``T / 2`` steps exhaust
    ``1..T``. All-zero pieces are dropped.
    """
    if T < 2 or T % 2:
        raise ValueError("T must be an even integer >= 2")
    tau = np.arange(0, T + 1, dtype=float)
    resid = np.asarray(rho(tau), dtype=float).copy()
    scale = max(1.0, float(np.max(np.abs(resid))))
    pieces = []
    for anchor in range(T, 1, -2):
        level = resid[anchor]
        slope = resid[anchor] - resid[anchor - 1]
        piece = LinearPiece(anchor, float(level), float(slope))
        resid = resid - piece(tau)
        # convexity keeps the residual nonnegative on 1..anchor
        low = resid[1:anchor + 1].min()
        # periods after the anchor are already matched, so the piece must vanish there
        spill = float(piece(anchor + 1.0)) if anchor < T else 0.0
        if low < -1e-12 * scale or slope > 1e-12 * scale or spill > 1e-12 * scale:
            raise NonConvexDiscount(
                f"anchor {anchor}: residual {low:.3e}, slope {slope:.3e}, spill {spill:.3e}; "
                "discount is not convex decreasing")
        resid[anchor - 1:] = 0.0
        if abs(level) > 1e-15 * scale or abs(slope) > 1e-15 * scale:
            pieces.append(piece)
    tail = tail_sum(rho, T, max(horizon, T))
    recon = sum((p(tau[1:T]) for p in pieces), np.zeros(T - 1))
    residual = float(np.max(np.abs(np.asarray(rho(tau[1:T])) - recon))) if T > 1 else 0.0
    return Decomposition(tuple(pieces), T, eps, tail, tail < eps, residual)


def _exponential_expectation(rho: DiscountFunction, lam: float) -> float:
    k, p = rho.kind, rho.params
    if k == "exponential":
        return lam / (lam + p["rate"])
    if k == "constant":
        return 1.0
    if k == "truncated_linear":
        T = p["T"]
        return 1.0 + math.expm1(-lam * T) / (lam * T)
    if k == "mixture":
        return sum(w * _exponential_expectation(c, lam)
                   for w, c in zip(p["weights"], p["components"]))
    f = lambda t: float(rho.fn(np.asarray(t))) * lam * math.exp(-lam * t)
    cut = max(max(rho.knots, default=0.0), 50.0 / lam)
    pts = [x for x in rho.knots if 0 < x < cut] or None
    head = integrate.quad(f, 0.0, cut, points=pts, epsabs=1e-14, epsrel=1e-12, limit=500)[0]
    tail = integrate.quad(f, cut, math.inf, epsabs=1e-14, limit=200)[0]
    return head + tail


def expected_discount(rho: DiscountFunction, dist: DecisionTimeDistribution) -> float:
    """``E[rho(T)] = int rho dP``.

    Exact for the analytic kinds. Step CDFs (empirical) use right-point
    Stieltjes sums, which are exact for them; numeric CDFs use the
    trapezoid rule on CDF increments.
    """
    k, p = dist.kind, dist.params
    if k == "deterministic":
        return float(rho(p["time"]))
    if k == "exponential":
        return _exponential_expectation(rho, p["rate"])
    if k == "geometric":
        q = p["q"]
        if q >= 1.0:
            return float(rho(1.0))
        n = min(int(math.ceil(math.log(1e-18) / math.log1p(-q))), 10**7)
        t = np.arange(1, n + 1, dtype=float)
        w = q * np.exp((t - 1) * math.log1p(-q))
        if (1 - q) ** n > 1e-15:
            warnings.warn("geometric tail truncated", TruncationWarning, stacklevel=2)
        return float(np.sum(np.asarray(rho(t)) * w))
    if k == "empirical":
        val = float(np.sum(np.asarray(rho(dist.samples)))) / dist.n_total
        left = p.get("n_censored", 0) / dist.n_total
    else:
        g, F = dist.grid, dist.cdf
        r = np.asarray(rho(g))
        val = float(r[0] * F[0] + np.sum(0.5 * (r[1:] + r[:-1]) * np.diff(F)))
        left = 1.0 - F[-1]
    if left > PROPER_TOL and float(rho(dist.horizon)) * left > 1e-9:
        warnings.warn(f"{left:.2e} of the probability mass lies past the horizon "
                      "with non-negligible discount", TruncationWarning, stacklevel=2)
    return val
