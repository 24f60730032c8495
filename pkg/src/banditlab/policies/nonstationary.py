"""Policies for drifting and switching environments.

Discounted UCB, sliding-window UCB (each with a -Tuned padding option), the
Page-Hinkley detector, the Adapt-EvE meta-bandit, Exp3 with resets and a
Kalman-filter bandit.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from ..core import DomainError, IndexPolicy, Policy, PolicyDecision, argmax_tiebreak
from .adversarial import Exp3
from .ucb import UCBTuned


# ---------------------------------------------------------------------------
# Discounted UCB
# ---------------------------------------------------------------------------


class DiscountedStats:
    """Per-arm discounted reward sums and discounted counts N_t(gamma, i)."""

    def __init__(self, n_arms: int, gamma: float):
        if not 0.0 < gamma <= 1.0:
            raise DomainError("discount must lie in (0, 1]")
        self.gamma = float(gamma)
        self.sums = np.zeros(n_arms)
        self.sq = np.zeros(n_arms)
        self.counts = np.zeros(n_arms)

    def observe(self, arm: int, r: float) -> None:
        """Age every arm by one step, then add the new reward to ``arm``."""
        if self.gamma != 1.0:
            self.sums *= self.gamma
            self.sq *= self.gamma
            self.counts *= self.gamma
        self.sums[arm] += r
        self.sq[arm] += r * r
        self.counts[arm] += 1.0


def ducb_mean(stats: DiscountedStats, arm: int) -> float:
    n = stats.counts[arm]
    return math.inf if n == 0 else float(stats.sums[arm] / n)


def ducb_pad(stats: DiscountedStats, arm: int, B: float = 1.0, xi: float = 0.5) -> float:
    """2B sqrt(xi ln(sum_j N_j) / N_i)."""
    n = stats.counts[arm]
    if n == 0:
        return math.inf
    return 2.0 * B * math.sqrt(xi * max(0.0, math.log(stats.counts.sum())) / n)


class DiscountedUCB(Policy):
    name = "d-ucb"

    def __init__(self, n_arms, gamma: float = 0.995, B: float = 1.0, xi: float = 0.5, tuned: bool = False,
                 rng=None):
        super().__init__(n_arms, rng)
        self.stats = DiscountedStats(n_arms, gamma)
        self.B, self.xi, self.tuned = float(B), float(xi), tuned

    def scores(self, t):
        n = self.stats.counts
        if (n == 0).any():
            return np.where(n == 0, np.inf, 0.0)
        mean = self.stats.sums / n
        log_total = max(0.0, math.log(n.sum()))
        if self.tuned:
            v = self.stats.sq / n - mean**2 + np.sqrt(2.0 * log_total / n)
            return mean + self.B * np.sqrt(log_total / n * np.minimum(0.25, v))
        return mean + 2.0 * self.B * np.sqrt(self.xi * log_total / n)

    def select(self, t, context=None):
        s = self.scores(t)
        return PolicyDecision((argmax_tiebreak(s, self.rng),), s)

    def update(self, t, arms, rewards, context=None):
        self.stats.observe(arms[0], float(rewards[0]))


# ---------------------------------------------------------------------------
# Sliding-window UCB
# ---------------------------------------------------------------------------


class WindowBuffer:
    """The last ``tau`` (arm, reward) pairs with per-arm running sums.

    ``tau=None`` keeps everything.
    """

    def __init__(self, n_arms: int, tau: Optional[int]):
        if tau is not None and tau < 1:
            raise DomainError("window length must be >= 1")
        self.tau = tau
        self.pairs: deque = deque()
        self.sums = np.zeros(n_arms)
        self.sq = np.zeros(n_arms)
        self.counts = np.zeros(n_arms, dtype=np.int64)

    def __len__(self):
        return len(self.pairs)

    def push(self, arm: int, r: float) -> None:
        self.pairs.append((arm, r))
        self.sums[arm] += r
        self.sq[arm] += r * r
        self.counts[arm] += 1
        if self.tau is not None and len(self.pairs) > self.tau:
            old, x = self.pairs.popleft()
            self.counts[old] -= 1
            if self.counts[old] == 0:
                # Reset exactly so float residue cannot leak into a later mean.
                self.sums[old] = self.sq[old] = 0.0
            else:
                self.sums[old] -= x
                self.sq[old] -= x * x


def swucb_mean(buffer: WindowBuffer, arm: int) -> float:
    n = buffer.counts[arm]
    return math.inf if n == 0 else float(buffer.sums[arm] / n)


def swucb_pad(buffer: WindowBuffer, arm: int, t: int, B: float = 1.0, xi: float = 0.5) -> float:
    """B sqrt(xi ln(min(t, tau)) / N_t(tau, i))."""
    n = buffer.counts[arm]
    if n == 0:
        return math.inf
    span = t if buffer.tau is None else min(t, buffer.tau)
    return B * math.sqrt(xi * math.log(span) / n)


class SlidingWindowUCB(Policy):
    name = "sw-ucb"

    def __init__(self, n_arms, tau: Optional[int] = 1000, B: float = 1.0, xi: float = 0.5, tuned: bool = False,
                 rng=None):
        super().__init__(n_arms, rng)
        self.window = WindowBuffer(n_arms, tau)
        self.B, self.xi, self.tuned = float(B), float(xi), tuned

    def scores(self, t):
        n = self.window.counts
        if (n == 0).any():
            return np.where(n == 0, np.inf, 0.0)
        mean = self.window.sums / n
        span = t if self.window.tau is None else min(t, self.window.tau)
        log_span = math.log(span)
        if self.tuned:
            v = self.window.sq / n - mean**2 + np.sqrt(2.0 * log_span / n)
            return mean + self.B * np.sqrt(log_span / n * np.minimum(0.25, v))
        return mean + self.B * np.sqrt(self.xi * log_span / n)

    def select(self, t, context=None):
        s = self.scores(t)
        return PolicyDecision((argmax_tiebreak(s, self.rng),), s)

    def update(self, t, arms, rewards, context=None):
        self.window.push(arms[0], float(rewards[0]))


# ---------------------------------------------------------------------------
# Page-Hinkley
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhState:
    """Two-sided Page-Hinkley statistics.

    ``up`` accumulates x - mean - delta and alarms when it rises more than
    ``lam`` above its running minimum (mean increase); ``down`` accumulates
    x - mean + delta and alarms when it falls more than ``lam`` below its
    running maximum (mean decrease).
    """

    delta: float = 0.005
    lam: float = 50.0
    n: int = 0
    mean: float = 0.0
    up: float = 0.0
    up_min: float = 0.0
    down: float = 0.0
    down_max: float = 0.0

    def __post_init__(self):
        if self.delta < 0 or not self.lam > 0:
            raise DomainError("Page-Hinkley needs delta >= 0 and lambda > 0")


def ph_update(state: PhState, x: float) -> tuple[PhState, bool]:
    n = state.n + 1
    mean = state.mean + (x - state.mean) / n
    up = state.up + x - mean - state.delta
    down = state.down + x - mean + state.delta
    new = replace(state, n=n, mean=mean, up=up, up_min=min(state.up_min, up),
                  down=down, down_max=max(state.down_max, down))
    alarm = (new.up - new.up_min > new.lam) or (new.down_max - new.down > new.lam)
    return new, alarm


class PageHinkley:
    """Mutable convenience wrapper around :func:`ph_update`."""

    def __init__(self, delta: float = 0.005, lam: float = 50.0):
        self.state = PhState(delta, lam)

    def update(self, x: float) -> bool:
        self.state, alarm = ph_update(self.state, float(x))
        return alarm

    def reset(self) -> None:
        self.state = PhState(self.state.delta, self.state.lam)


# ---------------------------------------------------------------------------
# Adapt-EvE
# ---------------------------------------------------------------------------


class AdaptEvE(Policy):
    """UCB-Tuned (or another inner policy) restarted through a meta-bandit.

    The inner policy's rewards feed a Page-Hinkley detector.  On an alarm a
    two-armed UCB-Tuned meta-bandit chooses, for ``meta_period`` steps,
    between the trained instance (meta-arm 0) and a fresh one (meta-arm 1);
    the meta-arm played most often (ties: the trained one) then becomes the
    sole instance and the detector restarts.  Each instance counts its own
    steps.
    """

    name = "adapt-eve"

    def __init__(self, n_arms, inner: Optional[Callable[..., Policy]] = None, delta: float = 0.005,
                 lam: float = 50.0, meta_period: int = 200, rng=None):
        super().__init__(n_arms, rng)
        if meta_period < 1:
            raise DomainError("meta_period must be >= 1")
        self.factory = inner or (lambda k, rng: UCBTuned(k, rng=rng))
        self.detector = PageHinkley(delta, lam)
        self.meta_period = int(meta_period)
        self.active = self.factory(n_arms, self.rng)
        self.clock = {id(self.active): 0}
        self.meta: Optional[UCBTuned] = None
        self.candidates: list[Policy] = []
        self.meta_steps = 0
        self.alarms: list[int] = []
        self.outcomes: list[tuple[int, str]] = []
        self._choice = 0

    def force_alarm(self, t: int = 0) -> None:
        """Start a meta-duel now, as if the detector had fired."""
        self._start_meta(t)

    def _start_meta(self, t):
        self.alarms.append(t)
        fresh = self.factory(self.n_arms, self.rng)
        self.clock[id(fresh)] = 0
        self.candidates = [self.active, fresh]
        self.meta = UCBTuned(2, rng=self.rng)
        self.meta_steps = 0
        self.detector.reset()

    def _acting(self) -> Policy:
        return self.candidates[self._choice] if self.meta is not None else self.active

    def select(self, t, context=None):
        if self.meta is not None:
            self._choice = self.meta.select(self.meta_steps + 1).arm
        inst = self._acting()
        return inst.select(self.clock[id(inst)] + 1, context)

    def update(self, t, arms, rewards, context=None):
        inst = self._acting()
        self.clock[id(inst)] += 1
        inst.update(self.clock[id(inst)], arms, rewards, context)
        if self.meta is None:
            if self.detector.update(float(rewards[0])):
                self._start_meta(t)
            return
        self.meta_steps += 1
        self.meta.update(self.meta_steps, [self._choice], [float(rewards[0])])
        if self.meta_steps >= self.meta_period:
            counts = self.meta.counts
            winner = 1 if counts[1] > counts[0] else 0
            self.outcomes.append((t, "fresh" if winner else "trained"))
            self.active = self.candidates[winner]
            self.clock = {id(self.active): self.clock[id(self.active)]}
            self.meta, self.candidates = None, []


# ---------------------------------------------------------------------------
# Exp3.R
# ---------------------------------------------------------------------------


class Exp3R(Exp3):
    """Exp3 with resets driven by an optimistic drift test on gamma-observations.

    Time is cut into intervals holding ``interval`` gamma-observations each.
    When an interval closes, all weights reset to 1 if some arm's mean over
    the interval's gamma-observations beats the believed-best arm's (the
    largest weight) by at least ``margin``.
    """

    name = "exp3r"

    def __init__(self, n_arms, gamma: float = 0.1, interval: int = 100, margin: float = 0.05,
                 bounds=(0.0, 1.0), rng=None):
        super().__init__(n_arms, gamma, bounds, rng)
        if interval < 1:
            raise DomainError("interval must be >= 1")
        self.interval = int(interval)
        self.margin = float(margin)
        self.resets: list[int] = []
        self.interval_ends: list[int] = []
        self._t = 0
        self._clear()

    def _clear(self):
        self._sums = np.zeros(self.n_arms)
        self._counts = np.zeros(self.n_arms)

    def update(self, t, arms, rewards, context=None):
        self._t = t
        super().update(t, arms, rewards, context)

    def observe_scaled(self, arm, r):
        if not self.last_uniform:
            return
        self._sums[arm] += r
        self._counts[arm] += 1
        if self._counts.sum() < self.interval:
            return
        self.interval_ends.append(self._t)
        best = int(np.argmax(self.weights))
        seen = self._counts > 0
        if seen[best] and math.isfinite(self.margin):
            means = np.where(seen, self._sums / np.maximum(self._counts, 1), -np.inf)
            if (means - means[best] >= self.margin).any():
                self.weights = np.ones(self.n_arms)
                self.resets.append(self._t)
        self._clear()


# ---------------------------------------------------------------------------
# Kalman-filter bandit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KalmanArm:
    mu: float
    var: float


def kalman_update(arm: KalmanArm, x: float, obs_var: float, trans_var: float) -> KalmanArm:
    """Posterior after observing ``x`` on this arm."""
    if obs_var <= 0 or trans_var < 0:
        raise DomainError("need obs_var > 0 and trans_var >= 0")
    prior = arm.var + trans_var
    denom = prior + obs_var
    return KalmanArm((prior * x + obs_var * arm.mu) / denom, prior * obs_var / denom)


def kalman_idle(arm: KalmanArm, trans_var: float) -> KalmanArm:
    return KalmanArm(arm.mu, arm.var + trans_var)


class KalmanBandit(Policy):
    """Independent random-walk Kalman filter per arm.

    Selection draws from Normal(mu, var) per arm (``rule="thompson"``) or
    scores mu + 2 sd (``rule="ucb"``).  Priors start at the midpoint of
    ``bounds`` with variance (range/2)^2.
    """

    name = "kalman"

    def __init__(self, n_arms, obs_var: float = 0.25, trans_var: float = 1e-4, rule: str = "thompson",
                 bounds=(0.0, 1.0), rng=None):
        super().__init__(n_arms, rng)
        if rule not in ("thompson", "ucb"):
            raise DomainError(f"unknown selection rule {rule!r}")
        lo, hi = bounds
        self.obs_var, self.trans_var, self.rule = float(obs_var), float(trans_var), rule
        self.arms = [KalmanArm((lo + hi) / 2.0, ((hi - lo) / 2.0) ** 2) for _ in range(self.n_arms)]

    def select(self, t, context=None):
        mu = np.array([a.mu for a in self.arms])
        sd = np.sqrt([a.var for a in self.arms])
        s = mu + (sd * self.rng.standard_normal(self.n_arms) if self.rule == "thompson" else 2.0 * sd)
        return PolicyDecision((argmax_tiebreak(s, self.rng),), s)

    def update(self, t, arms, rewards, context=None):
        played = arms[0]
        self.arms = [kalman_update(a, float(rewards[0]), self.obs_var, self.trans_var) if i == played
                     else kalman_idle(a, self.trans_var) for i, a in enumerate(self.arms)]
