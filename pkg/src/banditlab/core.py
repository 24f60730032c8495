"""Shared types, the policy contract, seeded randomness and small numeric helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when an input lies outside the domain an operation is defined on."""


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by ``(master_seed, stream_id)``.

    The generator is Philox4x64-10 (a counter-based generator with a public
    reference description) keyed with the two 64-bit words
    ``(master_seed, stream_id)``.  Substream ``k`` starts from the counter
    ``(0, 0, 0, k)``, so substreams never overlap in practice (2**192 draws
    apart).  Identical keys give bit-identical draws on any platform running
    numpy's Philox implementation.
    """

    master_seed: int
    stream_id: int = 0

    def generator(self, substream: int = 0) -> np.random.Generator:
        key = np.array([self.master_seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        counter = np.array([0, 0, 0, substream & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


def make_rng(rng: Optional[np.random.Generator | int] = None) -> np.random.Generator:
    """Coerce ``None``/an int seed/a Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return RngStream(0).generator()
    return RngStream(int(rng)).generator()


# ---------------------------------------------------------------------------
# Per-arm statistics
# ---------------------------------------------------------------------------


@dataclass
class ArmStats:
    count: int = 0
    mean: float = 0.0
    sum_squares: float = 0.0

    @property
    def variance(self) -> float:
        """Biased (1/n) sample variance, never negative."""
        if self.count == 0:
            return 0.0
        return max(0.0, self.sum_squares / self.count - self.mean * self.mean)


def update_stats(stats: ArmStats, reward: float) -> ArmStats:
    """Return ``stats`` folded with one more observation.

    The mean is updated incrementally rather than as sum/count, which keeps
    it inside the range of the observed rewards over long horizons.
    """
    reward = float(reward)
    if not math.isfinite(reward):
        raise DomainError(f"reward must be finite, got {reward!r}")
    n = stats.count + 1
    mean = stats.mean + (reward - stats.mean) / n
    return ArmStats(n, mean, stats.sum_squares + reward * reward)


# ---------------------------------------------------------------------------
# Tie-broken argmax
# ---------------------------------------------------------------------------


def argmax_tiebreak(scores: Sequence[float] | np.ndarray, rng: np.random.Generator) -> int:
    """Index of the largest score, ties broken uniformly at random.

    ``+inf`` is a legal score (the "not yet played" sentinel).  NaN entries are
    ignored unless every entry is NaN.  Randomness is consumed only when a tie
    actually occurs.
    """
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise DomainError("argmax over an empty score list")
    i = int(s.argmax())
    best = s[i]
    if best == best:  # argmax lands on a NaN if there is one
        if np.count_nonzero(s == best) == 1:
            return i
    elif np.isnan(s).all():
        raise DomainError("all scores are NaN")
    else:
        s = np.where(np.isnan(s), -np.inf, s)
    best = s.max()
    ties = np.flatnonzero(s == best)
    if ties.size == 1:
        return int(ties[0])
    return int(ties[rng.integers(ties.size)])


def top_m_tiebreak(scores: Sequence[float] | np.ndarray, m: int, rng: np.random.Generator) -> tuple[int, ...]:
    """The ``m`` highest-scoring indices, ties at the cut broken uniformly.

    For ``m == 1`` this consumes randomness exactly like :func:`argmax_tiebreak`.
    """
    s = np.asarray(scores, dtype=float)
    if not 1 <= m <= s.size:
        raise DomainError(f"m={m} must lie in [1, {s.size}]")
    if m == 1:
        return (argmax_tiebreak(s, rng),)
    if np.isnan(s).all():
        raise DomainError("all scores are NaN")
    s = np.where(np.isnan(s), -np.inf, s)
    order = np.argsort(-s, kind="stable")
    cut = s[order[m - 1]]
    above = [int(i) for i in order if s[i] > cut]
    tied = np.flatnonzero(s == cut)
    need = m - len(above)
    if tied.size > need:
        tied = rng.choice(tied, size=need, replace=False)
    return tuple(above + sorted(int(i) for i in tied))


# ---------------------------------------------------------------------------
# Decisions, logs, policy contract
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolicyDecision:
    arms: tuple
    scores: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.arms)
        if n == 0:
            raise DomainError("a decision must contain at least one arm")
        if n > 1 and len(set(self.arms)) != n:
            raise DomainError(f"arms in a decision must be distinct: {self.arms}")

    @property
    def arm(self):
        """The single chosen arm (or point) of a single-play decision."""
        if len(self.arms) != 1:
            raise DomainError("decision holds several arms; use .arms")
        return self.arms[0]


@dataclass
class PullLog:
    """Append-only history of plays.

    ``arms`` holds an int per step for single play, a tuple of ints for
    multi-play and a float for continuum policies.
    """

    arms: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    contexts: list = field(default_factory=list)

    def append(self, step: int, arms: Any, rewards: Any, context: Any = None) -> None:
        if step != len(self.arms) + 1:
            raise DomainError(f"expected step {len(self.arms) + 1}, got {step}")
        if isinstance(arms, (tuple, list)):
            if len(set(arms)) != len(arms):
                raise DomainError(f"multi-play arms must be distinct: {arms}")
            arms = tuple(arms)
            rewards = tuple(float(r) for r in rewards)
        self.arms.append(arms)
        self.rewards.append(rewards)
        self.contexts.append(context)

    def __len__(self) -> int:
        return len(self.arms)

    @property
    def steps(self) -> np.ndarray:
        return np.arange(1, len(self.arms) + 1)

    @property
    def plays(self) -> int:
        """Arms played per step (m)."""
        if not self.arms:
            return 1
        first = self.arms[0]
        return len(first) if isinstance(first, tuple) else 1

    def arm_matrix(self) -> np.ndarray:
        """Chosen arms as an (H, m) array."""
        a = np.asarray(self.arms)
        return a.reshape(len(self.arms), -1)

    def reward_matrix(self) -> np.ndarray:
        r = np.asarray(self.rewards, dtype=float)
        return r.reshape(len(self.rewards), -1)

    def rewards_by_arm(self, n_arms: int) -> list[np.ndarray]:
        arms = self.arm_matrix().ravel()
        rewards = self.reward_matrix().ravel()
        return [rewards[arms == i] for i in range(n_arms)]


class Policy:
    """Base class for all policies.

    A policy is a single-threaded state machine driven by
    ``select(t, context) -> PolicyDecision`` followed by
    ``update(t, arms, rewards, context)`` once the rewards of the chosen arms
    are known.  Steps are 1-based.
    """

    name = "policy"
    plays = 1

    def __init__(self, n_arms: int, rng: Optional[np.random.Generator | int] = None):
        if n_arms < 1:
            raise DomainError("need at least one arm")
        self.n_arms = int(n_arms)
        self.rng = make_rng(rng)

    def select(self, t: int, context: Any = None) -> PolicyDecision:
        raise NotImplementedError

    def update(self, t: int, arms: Sequence, rewards: Sequence[float], context: Any = None) -> None:
        raise NotImplementedError


class IndexPolicy(Policy):
    """Play the arm with the largest index; unplayed arms score ``+inf``.

    Subclasses implement :meth:`indices` for arms with at least one play.
    """

    def __init__(self, n_arms: int, rng=None):
        super().__init__(n_arms, rng)
        self.counts = np.zeros(self.n_arms, dtype=np.int64)
        self.means = np.zeros(self.n_arms)
        self.sum_squares = np.zeros(self.n_arms)
        self._unplayed = self.n_arms

    def indices(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def scores(self, t: int) -> np.ndarray:
        if self._unplayed:
            return np.where(self.counts == 0, np.inf, 0.0)
        return self.indices(t)

    def select(self, t, context=None):
        s = self.scores(t)
        return PolicyDecision((argmax_tiebreak(s, self.rng),), s)

    def update(self, t, arms, rewards, context=None):
        for a, r in zip(arms, rewards):
            r = float(r)
            if not math.isfinite(r):
                raise DomainError(f"reward must be finite, got {r!r}")
            n = self.counts[a] + 1
            if n == 1:
                self._unplayed -= 1
            self.counts[a] = n
            self.means[a] += (r - self.means[a]) / n
            self.sum_squares[a] += r * r
