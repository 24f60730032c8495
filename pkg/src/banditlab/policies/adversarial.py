"""Exponential-weights policies (Exp3, Exp4, Exp4.P) and the SAO hybrid."""
from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from ..core import DomainError, Policy, PolicyDecision

WEIGHT_CAP = 1e150


def _check_reward(r: float) -> float:
    r = float(r)
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"exponential-weights rewards must lie in [0, 1], got {r}")
    return r


def _rescale(r: float, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return _check_reward((float(r) - lo) / (hi - lo))


def _guard(w: np.ndarray) -> np.ndarray:
    # Probabilities depend on w only through w / sum(w).
    top = w.max()
    return w / top if top > WEIGHT_CAP else w


# ---------------------------------------------------------------------------
# Exp3
# ---------------------------------------------------------------------------


def exp3_probs(weights: np.ndarray, gamma: float) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    return (1.0 - gamma) * w / w.sum() + gamma / w.size


def exp3_update(weights: np.ndarray, arm: int, reward: float, p_played: float, gamma: float) -> np.ndarray:
    """Multiply the played arm's weight by exp(gamma * r / (p * K))."""
    if p_played <= 0:
        raise DomainError("p_played must be > 0")
    r = _check_reward(reward)
    w = np.array(weights, dtype=float)
    w[arm] *= math.exp(gamma * r / (p_played * w.size))
    return _guard(w)


class Exp3(Policy):
    """Exp3. Arms are sampled as a mixture: with probability gamma a uniform
    arm (a gamma-observation), otherwise proportionally to the weights; the
    resulting marginal is exactly ``exp3_probs``."""

    name = "exp3"

    def __init__(self, n_arms, gamma: float = 0.1, bounds: tuple[float, float] = (0.0, 1.0), rng=None):
        super().__init__(n_arms, rng)
        if not 0.0 <= gamma <= 1.0:
            raise DomainError("gamma must lie in [0, 1]")
        self.gamma = float(gamma)
        self.bounds = tuple(bounds)
        self.weights = np.ones(self.n_arms)
        self._probs = self.probs()
        self.last_uniform = False

    def probs(self) -> np.ndarray:
        return exp3_probs(self.weights, self.gamma)

    def select(self, t, context=None):
        w = self.weights
        cum = np.cumsum(w)
        self._probs = (1.0 - self.gamma) * w / cum[-1] + self.gamma / self.n_arms
        self.last_uniform = self.rng.random() < self.gamma
        if self.last_uniform:
            arm = int(self.rng.integers(self.n_arms))
        else:
            arm = min(int(cum.searchsorted(self.rng.random() * cum[-1], side="right")), self.n_arms - 1)
        return PolicyDecision((arm,), self._probs)

    def update(self, t, arms, rewards, context=None):
        arm, r = arms[0], _rescale(rewards[0], self.bounds)
        # Weights have not moved since select, so these are the sampling probabilities.
        p = self._probs[arm]
        self.weights[arm] *= math.exp(self.gamma * r / (p * self.n_arms))
        if self.weights[arm] > WEIGHT_CAP:
            self.weights = _guard(self.weights)
        self.observe_scaled(arm, r)

    def observe_scaled(self, arm: int, r: float) -> None:
        pass


# ---------------------------------------------------------------------------
# Exp4 / Exp4.P
# ---------------------------------------------------------------------------


def _check_advice(advice) -> np.ndarray:
    xi = np.atleast_2d(np.asarray(advice, dtype=float))
    if (xi < 0).any() or not np.allclose(xi.sum(axis=1), 1.0, atol=1e-9):
        raise DomainError("each advice row must be a probability vector")
    return xi


def exp4_probs(expert_weights: np.ndarray, advice, gamma: float) -> np.ndarray:
    """(1 - gamma) * sum_j w_j xi_j / sum_j w_j + gamma / K."""
    xi = _check_advice(advice)
    w = np.asarray(expert_weights, dtype=float)
    return (1.0 - gamma) * (w @ xi) / w.sum() + gamma / xi.shape[1]


def exp4_update(expert_weights, advice, arm: int, reward: float, probs, gamma: float) -> np.ndarray:
    """w_j *= exp(gamma * y_j / K) with y_j = xi_j(arm) * r / p(arm)."""
    xi = _check_advice(advice)
    r = _check_reward(reward)
    y = xi[:, arm] * r / probs[arm]
    return _guard(np.asarray(expert_weights, dtype=float) * np.exp(gamma * y / xi.shape[1]))


def exp4p_update(expert_weights, advice, arm: int, reward: float, probs, delta: float, horizon: int,
                 gamma: float) -> np.ndarray:
    """Exp4.P: w_j *= exp(gamma/2 * (y_j + v_j sqrt(ln(N/delta) / (K H)))), v_j = sum_i xi_j(i) / p_i."""
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    xi = _check_advice(advice)
    r = _check_reward(reward)
    p = np.asarray(probs, dtype=float)
    n_experts, k = xi.shape
    y = xi[:, arm] * r / p[arm]
    v = (xi / p).sum(axis=1)
    bonus = v * math.sqrt(math.log(n_experts / delta) / (k * horizon))
    return _guard(np.asarray(expert_weights, dtype=float) * np.exp(gamma / 2.0 * (y + bonus)))


Advice = Callable[[int, object], Sequence[float]]


def constant_expert(row: Sequence[float]) -> Advice:
    row = np.asarray(row, dtype=float)
    return lambda t, context: row


def point_mass_experts(n_arms: int) -> list[Advice]:
    """One expert per arm, always recommending that arm."""
    return [constant_expert(np.eye(n_arms)[i]) for i in range(n_arms)]


def linear_context_expert(theta) -> Advice:
    """Point mass on argmax_i theta_i . context."""
    theta = np.asarray(theta, dtype=float)

    def advise(t, context):
        row = np.zeros(theta.shape[0])
        row[int(np.argmax(theta @ np.asarray(context, dtype=float)))] = 1.0
        return row

    return advise


class Exp4(Policy):
    name = "exp4"

    def __init__(self, n_arms, experts: Sequence[Advice], gamma: float = 0.1, bounds=(0.0, 1.0), rng=None):
        super().__init__(n_arms, rng)
        if not experts:
            raise DomainError("Exp4 needs at least one expert")
        self.experts = list(experts)
        self.gamma = float(gamma)
        self.bounds = tuple(bounds)
        self.weights = np.ones(len(self.experts))
        self._advice: Optional[np.ndarray] = None
        self._probs: Optional[np.ndarray] = None

    def select(self, t, context=None):
        self._advice = _check_advice([e(t, context) for e in self.experts])
        self._probs = exp4_probs(self.weights, self._advice, self.gamma)
        arm = min(int(np.searchsorted(np.cumsum(self._probs), self.rng.random(), side="right")), self.n_arms - 1)
        return PolicyDecision((arm,), self._probs)

    def update(self, t, arms, rewards, context=None):
        r = _rescale(rewards[0], self.bounds)
        self.weights = exp4_update(self.weights, self._advice, arms[0], r, self._probs, self.gamma)


class Exp4P(Exp4):
    name = "exp4p"

    def __init__(self, n_arms, experts, horizon: int, delta: float = 0.1, gamma: float = 0.1,
                 bounds=(0.0, 1.0), rng=None):
        super().__init__(n_arms, experts, gamma, bounds, rng)
        self.horizon = int(horizon)
        self.delta = float(delta)

    def update(self, t, arms, rewards, context=None):
        r = _rescale(rewards[0], self.bounds)
        self.weights = exp4p_update(self.weights, self._advice, arms[0], r, self._probs, self.delta,
                                    self.horizon, self.gamma)


# ---------------------------------------------------------------------------
# SAO
# ---------------------------------------------------------------------------


class SAO(Policy):
    """Two-arm stochastic-and-adversarial policy.

    Phases: ``"exploration"`` (uniform play for at least C^2 rounds and until
    the mean gap reaches 24C/sqrt(t)), ``"exploitation"`` (the worse arm is
    drawn with probability tau*/(2t) while the consistency checks hold) and
    ``"adversarial"`` (everything handed to an embedded Exp3).  The frozen
    reference means are the empirical means at the switch step tau*.
    """

    name = "sao"

    def __init__(self, n_arms, horizon: int, C: Optional[float] = None, gamma: float = 0.1,
                 bounds=(0.0, 1.0), rng=None):
        super().__init__(n_arms, rng)
        if self.n_arms != 2:
            raise DomainError("SAO is defined for exactly two arms")
        self.horizon = int(horizon)
        self.C = 12.0 * math.log(horizon) if C is None else float(C)
        self.bounds = tuple(bounds)
        self.phase = "exploration"
        self.tau_star: Optional[int] = None
        self.best: Optional[int] = None
        self.frozen: Optional[np.ndarray] = None
        self.sums = np.zeros(2)
        self.counts = np.zeros(2)
        self.fallback = Exp3(2, gamma, rng=self.rng)

    @property
    def averages(self) -> np.ndarray:
        return self.sums / np.maximum(self.counts, 1)

    def select(self, t, context=None):
        if self.phase == "exploration":
            return PolicyDecision((int(self.rng.integers(2)),))
        if self.phase == "exploitation":
            p_worse = self.tau_star / (2.0 * t)
            worse = 1 - self.best
            arm = worse if self.rng.random() < p_worse else self.best
            return PolicyDecision((arm,))
        return self.fallback.select(t, context)

    def update(self, t, arms, rewards, context=None):
        arm, r = arms[0], _rescale(rewards[0], self.bounds)
        if self.phase == "adversarial":
            self.fallback.update(t, arms, [r], context)
            return
        self.sums[arm] += r
        self.counts[arm] += 1
        h = self.averages
        c = self.C
        if self.phase == "exploration":
            if t >= c * c and (self.counts > 0).all() and abs(h[0] - h[1]) >= 24.0 * c / math.sqrt(t):
                self.phase = "exploitation"
                self.tau_star = t
                self.best = int(np.argmax(h))
                self.frozen = h.copy()
            return
        b, w = self.best, 1 - self.best
        root_tau = math.sqrt(self.tau_star)
        consistent = (
            8.0 * c / root_tau <= h[b] - h[w] <= 40.0 * c / root_tau
            and abs(h[b] - self.frozen[b]) <= 6.0 * c / math.sqrt(t)
            and abs(h[w] - self.frozen[w]) <= 6.0 * c / root_tau
        )
        if not consistent:
            self.phase = "adversarial"
