"""Uncertainty measures, posterior lotteries and the posterior-separable cost.

Beliefs are plain numpy arrays over a finite state space. A bare float is
accepted wherever a belief is expected and is read as the probability of
state 1 in a binary model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

BELIEF_TOL = 1e-12
PLAUSIBILITY_TOL = 1e-10
CONCAVITY_GRID = 1001


class NotBayesPlausible(ValueError):
    """Atoms of a lottery do not average back to its prior."""


class NotConcave(ValueError):
    pass


class NotConvex(ValueError):
    pass


def as_belief(x) -> np.ndarray:
    """Validate and return a read-only belief vector."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"belief must be 1-d, got shape {arr.shape}")
    if arr.size == 1:
        arr = np.array([1.0 - arr[0], arr[0]])
    if np.any(arr < -BELIEF_TOL) or np.any(arr > 1 + BELIEF_TOL):
        raise ValueError(f"belief weights outside [0,1]: {arr}")
    if abs(arr.sum() - 1.0) > BELIEF_TOL:
        raise ValueError(f"belief weights sum to {arr.sum()!r}, not 1")
    arr = np.clip(arr, 0.0, 1.0)
    arr.setflags(write=False)
    return arr


def _as_belief_array(x) -> np.ndarray:
    """A float is a binary belief; anything else has states on the last axis."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return np.array([1.0 - arr, arr])
    return arr


def binary_chart(mu) -> np.ndarray:
    """Stack probabilities of state 1 into binary belief vectors."""
    mu = np.asarray(mu, dtype=float)
    return np.stack([1.0 - mu, mu], axis=-1)


def simplex_grid(n_states: int, resolution: int) -> np.ndarray:
    """All beliefs with coordinates in multiples of ``1/resolution``."""
    if n_states == 1:
        return np.ones((1, 1))
    pts = []

    def rec(prefix, remaining, k):
        if k == 1:
            pts.append(prefix + [remaining])
            return
        for i in range(remaining + 1):
            rec(prefix + [i], remaining - i, k - 1)

    rec([], resolution, n_states)
    return np.asarray(pts, dtype=float) / resolution


class UncertaintyMeasure:
    """A concave uncertainty index ``H`` on beliefs.

    ``fn`` maps an array of shape ``(..., n_states)`` to shape ``(...)``.
    ``second_derivative`` is only meaningful in the binary scalar chart.
    """

    def __init__(self, name: str, fn: Callable[[np.ndarray], np.ndarray],
                 second_derivative: Callable[[np.ndarray], np.ndarray] | None = None,
                 n_states: int | None = None, check: bool = True):
        self.name = name
        self._fn = fn
        self._d2 = second_derivative
        self.n_states = n_states
        if check:
            self._check_concave()

    def __call__(self, belief) -> np.ndarray | float:
        arr = _as_belief_array(belief)
        out = self._fn(arr)
        return float(out) if np.ndim(out) == 0 else out

    def binary(self, mu) -> np.ndarray | float:
        """Evaluate at probabilities of state 1 (any array shape)."""
        out = self._fn(binary_chart(mu))
        return float(out) if np.ndim(out) == 0 else out

    def second_derivative(self, mu) -> np.ndarray | float:
        if self._d2 is None:
            raise NotImplementedError(f"{self.name}: no second derivative available")
        out = self._d2(np.asarray(mu, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def _check_concave(self):
        x = np.linspace(0.0, 1.0, CONCAVITY_GRID)
        h = np.asarray(self.binary(x))
        d2 = h[2:] - 2 * h[1:-1] + h[:-2]
        if np.any(d2 > 1e-9):
            i = int(np.argmax(d2))
            raise NotConcave(f"{self.name} is not concave near mu={x[i + 1]:.4f}")

    def __repr__(self):
        return f"UncertaintyMeasure({self.name!r})"


def quadratic() -> UncertaintyMeasure:
    """``H(mu) = 2(1 - sum mu_i^2)``; in the binary chart ``1 - 4(mu - 1/2)^2``."""
    return UncertaintyMeasure(
        "quadratic",
        lambda b: 2.0 * (1.0 - np.sum(b * b, axis=-1)),
        second_derivative=lambda mu: np.full_like(mu, -8.0),
    )


def entropy() -> UncertaintyMeasure:
    """Shannon entropy in bits (equals 1 at the binary uniform prior)."""

    def fn(b):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(b > 0, -b * np.log2(np.where(b > 0, b, 1.0)), 0.0)
        return np.sum(terms, axis=-1)

    def d2(mu):
        with np.errstate(divide="ignore"):
            return -1.0 / (np.log(2.0) * mu * (1.0 - mu))

    return UncertaintyMeasure("entropy", fn, second_derivative=d2)


def tabulated(grid: Sequence[float], values: Sequence[float]) -> UncertaintyMeasure:
    """Binary-state ``H`` given at points of [0, 1], linearly interpolated."""
    g = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    if g.shape != v.shape or g.ndim != 1 or g.size < 2:
        raise ValueError("grid and values must be 1-d arrays of equal length >= 2")
    if np.any(np.diff(g) <= 0) or g[0] > 0 or g[-1] < 1:
        raise ValueError("grid must be increasing and cover [0, 1]")
    return UncertaintyMeasure(
        "tabulated", lambda b: np.interp(b[..., 1], g, v), n_states=2
    )


@dataclass(frozen=True, eq=False)
class PosteriorLottery:
    """Finite distribution over posterior beliefs, attached to a prior.

    Bayes plausibility is not enforced here; use :func:`bayes_plausible`
    (the cost functionals reject implausible lotteries).
    """

    posteriors: np.ndarray  # (k, n_states)
    probs: np.ndarray  # (k,)
    prior: np.ndarray  # (n_states,)

    def __post_init__(self):
        post = np.atleast_2d(np.array(self.posteriors, dtype=float))
        probs = np.atleast_1d(np.array(self.probs, dtype=float))
        prior = as_belief(self.prior)
        if post.shape[0] != probs.shape[0]:
            raise ValueError("one probability per posterior required")
        if post.shape[1] != prior.shape[0]:
            raise ValueError("posteriors and prior live on different state spaces")
        for row in post:
            as_belief(row)
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > BELIEF_TOL:
            raise ValueError(f"atom probabilities must be >= 0 and sum to 1: {probs}")
        post.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "posteriors", post)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "prior", prior)

    @classmethod
    def from_atoms(cls, atoms, prior) -> "PosteriorLottery":
        """``atoms`` is a sequence of ``(posterior, prob)`` pairs."""
        prior = as_belief(prior)
        posts = [as_belief(nu) for nu, _ in atoms]
        return cls(np.array(posts), np.array([p for _, p in atoms], dtype=float), prior)

    @classmethod
    def degenerate(cls, prior) -> "PosteriorLottery":
        prior = as_belief(prior)
        return cls(prior[None, :], np.array([1.0]), prior)

    @property
    def n_states(self) -> int:
        return self.prior.shape[0]

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs > 0))

    def barycenter(self) -> np.ndarray:
        return self.probs @ self.posteriors

    def mixture(self, other: "PosteriorLottery", weight: float) -> "PosteriorLottery":
        """``weight * self + (1 - weight) * other`` (common prior required)."""
        if not np.allclose(self.prior, other.prior, atol=BELIEF_TOL):
            raise ValueError("mixtures need a common prior")
        return PosteriorLottery(
            np.vstack([self.posteriors, other.posteriors]),
            np.concatenate([weight * self.probs, (1 - weight) * other.probs]),
            self.prior,
        )

    def to_json(self) -> dict:
        return {
            "prior": self.prior.tolist(),
            "atoms": [{"posterior": nu.tolist(), "prob": float(p)}
                      for nu, p in zip(self.posteriors, self.probs)],
        }


class DecisionUtility:
    """Indirect utility ``F(mu) = max_a E_mu[u(a, x)]`` or a user callable."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], name: str = "F",
                 check: bool = True, n_states: int = 2):
        self._fn = fn
        self.name = name
        if check:
            self._check_convex(n_states)

    def __call__(self, belief):
        out = self._fn(_as_belief_array(belief))
        return float(out) if np.ndim(out) == 0 else out

    def binary(self, mu):
        out = self._fn(binary_chart(mu))
        return float(out) if np.ndim(out) == 0 else out

    def _check_convex(self, n_states):
        if n_states != 2:
            return
        x = np.linspace(0.0, 1.0, CONCAVITY_GRID)
        f = np.asarray(self.binary(x))
        d2 = f[2:] - 2 * f[1:-1] + f[:-2]
        if np.any(d2 < -1e-9):
            raise NotConvex(f"{self.name} is not convex")

    @classmethod
    def max_affine(cls, payoffs) -> "DecisionUtility":
        """``payoffs[a, x]`` is the utility of action ``a`` in state ``x``."""
        u = np.asarray(payoffs, dtype=float)
        if u.ndim != 2:
            raise ValueError("payoffs must be an (actions, states) matrix")
        # max of affine functions: convex by construction
        return cls(lambda b: np.max(b @ u.T, axis=-1), name="max_affine", check=False)

    @classmethod
    def binary_match(cls) -> "DecisionUtility":
        """``F(nu) = max(nu, 1 - nu)``: guess the state, payoff 1 if right."""
        return cls.max_affine(np.eye(2))


def bayes_plausible(lottery: PosteriorLottery, tol: float = PLAUSIBILITY_TOL) -> bool:
    return bool(np.max(np.abs(lottery.barycenter() - lottery.prior)) <= tol)


def _require_plausible(lottery: PosteriorLottery):
    if not bayes_plausible(lottery):
        raise NotBayesPlausible(
            f"barycenter {lottery.barycenter()} differs from prior {lottery.prior}"
        )


def info_cost(lottery: PosteriorLottery, H: UncertaintyMeasure) -> float:
    """Posterior-separable cost ``sum_i p_i (H(prior) - H(nu_i))``."""
    _require_plausible(lottery)
    h_post = np.asarray(H(lottery.posteriors))
    cost = float(H(lottery.prior) - lottery.probs @ h_post)
    # Jensen guarantees >= 0; clip roundoff
    return max(cost, 0.0) if cost > -1e-12 else cost


def full_info_value(lottery: PosteriorLottery, F: DecisionUtility) -> float:
    """Expected decision value ``E_pi[F(nu)]`` once the target is realised."""
    _require_plausible(lottery)
    return float(lottery.probs @ np.asarray(F(lottery.posteriors)))
