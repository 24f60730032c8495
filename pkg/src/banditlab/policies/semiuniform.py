"""Semi-uniform strategies: epsilon-greedy schedules, epsilon-first, epoch restarts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import DomainError, IndexPolicy, Policy, PolicyDecision, argmax_tiebreak


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


class EpsilonSchedule:
    def epsilon_at(self, t: int) -> float:
        raise NotImplementedError

    def __call__(self, t: int) -> float:
        if t < 1:
            raise DomainError(f"steps are 1-based, got t={t}")
        return self.epsilon_at(t)


@dataclass(frozen=True)
class Constant(EpsilonSchedule):
    eps0: float

    def __post_init__(self):
        if not 0.0 <= self.eps0 <= 1.0:
            raise DomainError("constant epsilon must lie in [0, 1]")

    def epsilon_at(self, t):
        return self.eps0


@dataclass(frozen=True)
class VermorelDecreasing(EpsilonSchedule):
    """min(1, eps0 / t)."""

    eps0: float

    def __post_init__(self):
        if self.eps0 < 0:
            raise DomainError("eps0 must be >= 0")

    def epsilon_at(self, t):
        return min(1.0, self.eps0 / t)


@dataclass(frozen=True)
class GreedyMix(EpsilonSchedule):
    """min(1, 5K/d^2 * ln(t-1)/(t-1)).

    Steps 1 and 2 return 1: the log is undefined at t=1 and zero at t=2, and
    since 5K/d^2 > 5 the clipped formula is already 1 from t=3 until it starts
    to decay, so this keeps the schedule non-increasing.
    """

    d: float
    n_arms: int

    def __post_init__(self):
        if not 0.0 < self.d < 1.0:
            raise DomainError("GreedyMix needs 0 < d < 1")
        if self.n_arms < 1:
            raise DomainError("n_arms must be >= 1")

    def epsilon_at(self, t):
        if t <= 2:
            return 1.0
        return min(1.0, 5.0 * self.n_arms / self.d**2 * math.log(t - 1) / (t - 1))


@dataclass(frozen=True)
class EpsilonN(EpsilonSchedule):
    """epsilon_n-greedy: min(1, cK / (d^2 t))."""

    c: float
    d: float
    n_arms: int

    def __post_init__(self):
        if self.c <= 0:
            raise DomainError("c must be > 0")
        if not 0.0 < self.d < 1.0:
            raise DomainError("epsilon_n-greedy needs 0 < d < 1")

    def epsilon_at(self, t):
        return min(1.0, self.c * self.n_arms / (self.d**2 * t))


@dataclass(frozen=True)
class EpsilonFirst(EpsilonSchedule):
    """Full exploration for the first ceil(eps0 * H) steps, none afterwards."""

    eps0: float
    horizon: int

    def __post_init__(self):
        if not 0.0 <= self.eps0 <= 1.0:
            raise DomainError("eps0 must lie in [0, 1]")
        if self.horizon < 1:
            raise DomainError("horizon must be >= 1")

    @property
    def budget(self) -> int:
        return math.ceil(self.eps0 * self.horizon)

    def epsilon_at(self, t):
        return 1.0 if t <= self.budget else 0.0


def epsilon_at(schedule: EpsilonSchedule, t: int) -> float:
    return schedule(t)


def epsilon_first_phase(t: int, horizon: int, eps0: float) -> str:
    """``"explore"`` while t <= ceil(eps0 * H), ``"exploit"`` afterwards."""
    if not 1 <= t <= horizon:
        raise DomainError(f"t={t} outside [1, {horizon}]")
    return "explore" if t <= math.ceil(eps0 * horizon) else "exploit"


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------


def greedy_scores(counts: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Empirical means with unplayed arms pinned at +inf."""
    return np.where(counts == 0, np.inf, means)


def select_semiuniform(means: np.ndarray, eps: float, rng: np.random.Generator,
                       counts: np.ndarray | None = None) -> PolicyDecision:
    """With probability ``eps`` a uniform arm, else the best empirical mean."""
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"epsilon must lie in [0, 1], got {eps}")
    means = np.asarray(means, dtype=float)
    scores = means if counts is None else greedy_scores(counts, means)
    # One uniform per step regardless of eps keeps streams aligned across schedules.
    if rng.random() < eps:
        return PolicyDecision((int(rng.integers(means.size)),), scores)
    return PolicyDecision((argmax_tiebreak(scores, rng),), scores)


class EpsilonGreedy(IndexPolicy):
    name = "epsilon-greedy"

    def __init__(self, n_arms, schedule: EpsilonSchedule | float = 0.1, rng=None):
        super().__init__(n_arms, rng)
        self.schedule = Constant(float(schedule)) if isinstance(schedule, (int, float)) else schedule

    def select(self, t, context=None):
        return select_semiuniform(self.means, self.schedule(t), self.rng, self.counts)


class EpsilonFirstPolicy(IndexPolicy):
    """Uniform exploration, then commit to the best empirical mean for good."""

    name = "epsilon-first"

    def __init__(self, n_arms, eps0: float, horizon: int, rng=None):
        super().__init__(n_arms, rng)
        self.schedule = EpsilonFirst(eps0, horizon)
        self.committed: int | None = None

    def select(self, t, context=None):
        if epsilon_first_phase(min(t, self.schedule.horizon), self.schedule.horizon,
                               self.schedule.eps0) == "explore":
            return PolicyDecision((int(self.rng.integers(self.n_arms)),))
        if self.committed is None:
            self.committed = argmax_tiebreak(greedy_scores(self.counts, self.means), self.rng)
        return PolicyDecision((self.committed,))


class EpochWrapper(Policy):
    """Restart a fresh inner policy every ``epoch_length`` steps.

    ``factory(n_arms, horizon, rng)`` builds the inner policy; it is told the
    epoch length as its horizon and sees epoch-local step numbers.  All inner
    instances share this wrapper's generator.
    """

    name = "epoch"

    def __init__(self, n_arms, factory: Callable[..., Policy], epoch_length: int, rng=None):
        super().__init__(n_arms, rng)
        if epoch_length < 1:
            raise DomainError("epoch_length must be >= 1")
        self.factory = factory
        self.epoch_length = int(epoch_length)
        self.inner: Policy | None = None
        self.epoch = -1

    def _local(self, t: int) -> int:
        epoch, offset = divmod(t - 1, self.epoch_length)
        if epoch != self.epoch:
            self.epoch = epoch
            self.inner = self.factory(self.n_arms, self.epoch_length, self.rng)
        return offset + 1

    def select(self, t, context=None):
        local = self._local(t)
        return self.inner.select(local, context)

    def update(self, t, arms, rewards, context=None):
        local = self._local(t)
        self.inner.update(local, arms, rewards, context)
