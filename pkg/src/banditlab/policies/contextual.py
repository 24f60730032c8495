"""Linear contextual policies: ridge core, LinUCB, LinTS and the decayed (WLS) LinTS."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from ..core import DomainError, Policy, PolicyDecision, argmax_tiebreak

SIGMA2_FLOOR = 1e-6


@dataclass
class RidgeState:
    """Sufficient statistics of a ridge regression.

    ``A = X'WX + lam I`` and ``b = X'Wy``; ``yy`` (weighted response sum of
    squares) and ``n`` (observation count) feed the residual variance.
    """

    d: int
    lam: float = 1.0
    A: np.ndarray = field(default=None)
    b: np.ndarray = field(default=None)
    yy: float = 0.0
    n: int = 0

    def __post_init__(self):
        if self.lam <= 0:
            raise DomainError("ridge penalty must be > 0")
        if self.A is None:
            self.A = self.lam * np.eye(self.d)
        if self.b is None:
            self.b = np.zeros(self.d)

    def copy(self) -> "RidgeState":
        return RidgeState(self.d, self.lam, self.A.copy(), self.b.copy(), self.yy, self.n)

    @property
    def theta(self) -> np.ndarray:
        return np.linalg.solve(self.A, self.b)

    def add(self, x, y: float, weight: float = 1.0) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DomainError(f"expected a length-{self.d} context, got shape {x.shape}")
        if not (np.isfinite(x).all() and math.isfinite(y) and math.isfinite(weight)):
            raise DomainError("ridge inputs must be finite")
        self.A += weight * np.outer(x, x)
        self.b += weight * y * x
        self.yy += weight * y * y
        self.n += 1

    def predictive_variance(self, x) -> float:
        """x' A^-1 x."""
        x = np.asarray(x, dtype=float)
        return float(x @ np.linalg.solve(self.A, x))

    def residual_variance(self) -> float:
        """Residual mean square with a df correction; 1.0 before two residual df."""
        df = self.n - self.d
        if df < 2:
            return 1.0
        th = self.theta
        gram = self.A - self.lam * np.eye(self.d)
        rss = self.yy - 2.0 * th @ self.b + th @ gram @ th
        return max(SIGMA2_FLOOR, float(rss) / df)


def ridge_update(state: RidgeState, x, y: float) -> RidgeState:
    new = state.copy()
    new.add(x, float(y))
    return new


def linucb_score(state: RidgeState, x, alpha: float) -> float:
    """theta' x + alpha sqrt(x' A^-1 x)."""
    if alpha < 0:
        raise DomainError("alpha must be >= 0")
    x = np.asarray(x, dtype=float)
    return float(state.theta @ x + alpha * math.sqrt(max(0.0, state.predictive_variance(x))))


def lints_sample(state: RidgeState, x, rng: np.random.Generator) -> float:
    """One draw from Normal(theta' x, sigma^2 x' A^-1 x)."""
    x = np.asarray(x, dtype=float)
    sd = math.sqrt(state.residual_variance() * max(0.0, state.predictive_variance(x)))
    return float(state.theta @ x + sd * rng.standard_normal())


def wls_fit(data: Iterable[tuple], lam: float = 1.0) -> RidgeState:
    """Weighted ridge fit from ``(x, y, weight)`` triples."""
    data = list(data)
    if not data:
        raise DomainError("wls_fit needs at least one observation to know the dimension")
    state = RidgeState(len(data[0][0]), lam)
    for x, y, w in data:
        if w < 0:
            raise DomainError("weights must be >= 0")
        state.add(x, float(y), float(w))
    return state


def decay_weight(kind: str, age: int, c: float) -> float:
    """``"linear"``: 1 / (c max(age, 1)); ``"exponential"``: c ** -age."""
    if age < 0:
        raise DomainError("age must be >= 0")
    if kind == "linear":
        if c <= 0:
            raise DomainError("linear decay needs c > 0")
        return 1.0 / (c * max(age, 1))
    if kind == "exponential":
        if c <= 1:
            raise DomainError("exponential decay needs c > 1")
        return float(c) ** -age
    raise DomainError(f"unknown decay kind {kind!r}")


# ---------------------------------------------------------------------------
# Feature maps
# ---------------------------------------------------------------------------


class FeatureMap:
    """Turns (arm, world context) into a regression row.

    ``"disjoint"``: one model per arm fed the raw context.
    ``"interaction"``: a single shared model on ``[onehot(arm), onehot(arm) (x) context]``,
    i.e. arm dummies plus arm-by-context interactions.
    """

    def __init__(self, kind: str, n_arms: int, d: int):
        if kind not in ("disjoint", "interaction"):
            raise DomainError(f"unknown feature map {kind!r}")
        self.kind, self.n_arms, self.d = kind, n_arms, d

    @property
    def models(self) -> int:
        return self.n_arms if self.kind == "disjoint" else 1

    @property
    def dim(self) -> int:
        return self.d if self.kind == "disjoint" else self.n_arms * (1 + self.d)

    def __call__(self, arm: int, context) -> tuple[int, np.ndarray]:
        c = np.asarray(context, dtype=float)
        if self.kind == "disjoint":
            return arm, c
        row = np.zeros(self.dim)
        row[arm] = 1.0
        start = self.n_arms + arm * self.d
        row[start:start + self.d] = c
        return 0, row


class _LinearPolicy(Policy):
    def __init__(self, n_arms, d: int, lam: float = 1.0, feature_map: str = "disjoint", rng=None):
        super().__init__(n_arms, rng)
        self.fmap = FeatureMap(feature_map, n_arms, d)
        self.lam = float(lam)
        self.states = [RidgeState(self.fmap.dim, self.lam) for _ in range(self.fmap.models)]

    def _score(self, state: RidgeState, x) -> float:
        raise NotImplementedError

    def select(self, t, context=None):
        if context is None:
            raise DomainError(f"{self.name} needs a context")
        scores = np.empty(self.n_arms)
        for i in range(self.n_arms):
            m, x = self.fmap(i, context)
            scores[i] = self._score(self.states[m], x)
        return PolicyDecision((argmax_tiebreak(scores, self.rng),), scores)

    def update(self, t, arms, rewards, context=None):
        for a, r in zip(arms, rewards):
            m, x = self.fmap(a, context)
            self.states[m].add(x, float(r))


class LinUCB(_LinearPolicy):
    name = "linucb"

    def __init__(self, n_arms, d, alpha: float = 1.0, lam: float = 1.0, feature_map="disjoint", rng=None):
        super().__init__(n_arms, d, lam, feature_map, rng)
        if alpha < 0:
            raise DomainError("alpha must be >= 0")
        self.alpha = float(alpha)

    def _score(self, state, x):
        return linucb_score(state, x, self.alpha)


class LinTS(_LinearPolicy):
    name = "lints"

    def __init__(self, n_arms, d, lam: float = 1.0, feature_map="interaction", rng=None):
        super().__init__(n_arms, d, lam, feature_map, rng)

    def _score(self, state, x):
        return lints_sample(state, x, self.rng)


class DecayedLinTS(LinTS):
    """LinTS refitted each step by weighted least squares with time-decayed weights.

    Ages are trial counts (``t_now - t_observed``).  Callers needing calendar
    time can fit with :func:`wls_fit` directly on their own ages.
    """

    name = "lints-decay"

    def __init__(self, n_arms, d, decay: str = "exponential", c: float = 1.01, lam: float = 1.0,
                 feature_map="interaction", rng=None):
        super().__init__(n_arms, d, lam, feature_map, rng)
        decay_weight(decay, 0, c)
        self.decay, self.c = decay, float(c)
        self._hist: list[list[tuple[int, np.ndarray, float]]] = [[] for _ in range(self.fmap.models)]

    def select(self, t, context=None):
        for m, hist in enumerate(self._hist):
            if not hist:
                continue
            steps = np.array([s for s, _, _ in hist])
            X = np.array([x for _, x, _ in hist])
            y = np.array([r for _, _, r in hist])
            w = np.array([decay_weight(self.decay, int(a), self.c) for a in t - steps])
            st = RidgeState(self.fmap.dim, self.lam)
            st.A += X.T @ (w[:, None] * X)
            st.b += X.T @ (w * y)
            st.yy, st.n = float(w @ (y * y)), len(hist)
            self.states[m] = st
        return super().select(t, context)

    def update(self, t, arms, rewards, context=None):
        for a, r in zip(arms, rewards):
            m, x = self.fmap(a, context)
            self._hist[m].append((t, x, float(r)))
