"""Probability matching and sampling policies: Thompson sampling, POKER, BESA."""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm

from ..core import DomainError, IndexPolicy, Policy, PolicyDecision, argmax_tiebreak

VARIANCE_FLOOR = 1e-6


class PosteriorBank:
    """One conjugate posterior per arm.

    ``"bernoulli"``: Beta(a_i, b_i), updated with a += r, b += 1 - r.
    ``"gaussian"``: Normal posterior on each arm mean under a Normal(prior_mean,
    prior_var) prior and Gaussian rewards whose variance is estimated from the
    pooled within-arm residuals (1.0 until there is a residual degree of freedom).
    """

    def __init__(self, n_arms: int, likelihood: str = "bernoulli", prior_a: float = 1.0, prior_b: float = 1.0,
                 prior_mean: float = 0.0, prior_var: float = 1.0):
        if likelihood not in ("bernoulli", "gaussian"):
            raise DomainError(f"unknown likelihood {likelihood!r}")
        if min(prior_a, prior_b, prior_var) <= 0:
            raise DomainError("prior parameters must be > 0")
        self.likelihood = likelihood
        self.n_arms = int(n_arms)
        self.a = np.full(self.n_arms, float(prior_a))
        self.b = np.full(self.n_arms, float(prior_b))
        self.prior_mean, self.prior_var = float(prior_mean), float(prior_var)
        self.counts = np.zeros(self.n_arms)
        self.sums = np.zeros(self.n_arms)
        self.sum_squares = np.zeros(self.n_arms)

    @classmethod
    def beta(cls, params: Sequence[tuple[float, float]]) -> "PosteriorBank":
        bank = cls(len(params))
        bank.a = np.array([p[0] for p in params], dtype=float)
        bank.b = np.array([p[1] for p in params], dtype=float)
        return bank

    def update(self, arm: int, r: float) -> None:
        if self.likelihood == "bernoulli":
            if not 0.0 <= r <= 1.0:
                raise DomainError("Beta/Bernoulli update needs a reward in [0, 1]")
            self.a[arm] += r
            self.b[arm] += 1.0 - r
        self.counts[arm] += 1
        self.sums[arm] += r
        self.sum_squares[arm] += r * r

    def noise_variance(self) -> float:
        played = self.counts > 0
        df = self.counts.sum() - played.sum()
        if df < 1:
            return 1.0
        n = self.counts[played]
        rss = (self.sum_squares[played] - self.sums[played] ** 2 / n).sum()
        return max(VARIANCE_FLOOR, rss / df)

    def normal_params(self) -> tuple[np.ndarray, np.ndarray]:
        s2 = self.noise_variance()
        prec = 1.0 / self.prior_var + self.counts / s2
        mean = (self.prior_mean / self.prior_var + self.sums / s2) / prec
        return mean, 1.0 / prec

    def mean(self) -> np.ndarray:
        if self.likelihood == "bernoulli":
            return self.a / (self.a + self.b)
        return self.normal_params()[0]

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        if self.likelihood == "bernoulli":
            return rng.beta(self.a, self.b)
        mean, var = self.normal_params()
        return mean + np.sqrt(var) * rng.standard_normal(self.n_arms)


def thompson_select(bank: PosteriorBank, rng: np.random.Generator) -> PolicyDecision:
    draws = bank.draw(rng)
    return PolicyDecision((argmax_tiebreak(draws, rng),), draws)


def thompson_select_optimistic(bank: PosteriorBank, rng: np.random.Generator) -> PolicyDecision:
    """Thompson draw floored at the posterior mean before the argmax."""
    draws = np.maximum(bank.draw(rng), bank.mean())
    return PolicyDecision((argmax_tiebreak(draws, rng),), draws)


class ThompsonSampling(Policy):
    name = "thompson"

    def __init__(self, n_arms, likelihood="bernoulli", optimistic: bool = False, rng=None, **prior):
        super().__init__(n_arms, rng)
        self.bank = PosteriorBank(n_arms, likelihood, **prior)
        self.optimistic = optimistic

    def select(self, t, context=None):
        if self.optimistic:
            return thompson_select_optimistic(self.bank, self.rng)
        return thompson_select(self.bank, self.rng)

    def update(self, t, arms, rewards, context=None):
        for a, r in zip(arms, rewards):
            self.bank.update(a, float(r))


# ---------------------------------------------------------------------------
# POKER
# ---------------------------------------------------------------------------


def poker_delta(means_desc: Sequence[float], n_arms: int) -> float:
    """(mu_(1) - mu_(floor(sqrt K))) / sqrt K over means sorted descending."""
    if n_arms < 1 or len(means_desc) != n_arms:
        raise DomainError("need one mean per arm")
    j = max(1, math.isqrt(n_arms))
    return (means_desc[0] - means_desc[j - 1]) / math.sqrt(n_arms)


def poker_score(mean: float, std_err: float, best_mean: float, delta: float, horizon: int, t: int) -> float:
    """mean + delta (H - t) P[mu >= best_mean + delta] under Normal(mean, std_err)."""
    remaining = max(0, horizon - t)
    if remaining == 0:
        return mean
    target = best_mean + delta
    if std_err > 0:
        p = float(norm.sf(target, loc=mean, scale=std_err))
    else:
        p = 1.0 if mean >= target else 0.0
    return mean + delta * remaining * p


class Poker(IndexPolicy):
    """POKER. ``horizon`` may be a fixed surrogate when the true horizon is unknown.

    Arms with a single observation use the pooled within-arm standard
    deviation; if no arm has two observations yet, the spread of all rewards
    seen so far (0.5 if that is zero or undefined).
    """

    name = "poker"

    def __init__(self, n_arms, horizon: int, rng=None):
        super().__init__(n_arms, rng)
        self.horizon = int(horizon)

    def _pooled_sd(self) -> float:
        n = self.counts
        df = int(n.sum() - (n > 0).sum())
        if df >= 1:
            rss = (self.sum_squares - n * self.means**2).sum()
            return math.sqrt(max(0.0, rss) / df)
        total = n.sum()
        if total >= 2:
            m = (self.means * n).sum() / total
            sd = math.sqrt(max(0.0, self.sum_squares.sum() / total - m * m))
            if sd > 0:
                return sd
        return 0.5

    def indices(self, t):
        n = self.counts
        means_desc = np.sort(self.means)[::-1]
        delta = poker_delta(means_desc, self.n_arms)
        best = means_desc[0]
        var = np.where(n >= 2, (self.sum_squares - n * self.means**2) / np.maximum(n - 1, 1), np.nan)
        sd = np.where(n >= 2, np.sqrt(np.maximum(var, 0.0)), self._pooled_sd())
        return np.array([poker_score(m, s / math.sqrt(k), best, delta, self.horizon, t)
                         for m, s, k in zip(self.means, sd, n)])


# ---------------------------------------------------------------------------
# BESA
# ---------------------------------------------------------------------------


def besa_duel(hist_i: Sequence[float], hist_j: Sequence[float], rng: np.random.Generator,
              arm_i: int = 0, arm_j: int = 1) -> int:
    """Winner of a two-arm BESA comparison.

    The longer history is subsampled without replacement down to the length of
    the shorter one; the sub-sample means are compared.  Ties go to the less
    played arm, then to a fair coin.
    """
    hi, hj = np.asarray(hist_i, dtype=float), np.asarray(hist_j, dtype=float)
    if hi.size == 0 or hj.size == 0:
        raise DomainError("BESA duel needs non-empty histories")
    n = min(hi.size, hj.size)
    if hi.size > n:
        hi = rng.choice(hi, size=n, replace=False)
    elif hj.size > n:
        hj = rng.choice(hj, size=n, replace=False)
    mi, mj = hi.mean(), hj.mean()
    if mi > mj:
        return arm_i
    if mj > mi:
        return arm_j
    if len(hist_i) != len(hist_j):
        return arm_i if len(hist_i) < len(hist_j) else arm_j
    return arm_i if rng.random() < 0.5 else arm_j


def besa_tournament(histories: Sequence[Sequence[float]], rng: np.random.Generator) -> int:
    """Knock-out BESA over a random arm order; an unpaired arm gets a bye."""
    if len(histories) < 1:
        raise DomainError("need at least one arm")
    alive = [int(i) for i in rng.permutation(len(histories))]
    while len(alive) > 1:
        nxt = []
        for k in range(0, len(alive) - 1, 2):
            i, j = alive[k], alive[k + 1]
            nxt.append(besa_duel(histories[i], histories[j], rng, i, j))
        if len(alive) % 2:
            nxt.append(alive[-1])
        alive = nxt
    return alive[0]


class BESA(Policy):
    """BESA; keeps every reward, so memory grows linearly with the horizon."""

    name = "besa"

    def __init__(self, n_arms, rng=None):
        super().__init__(n_arms, rng)
        self.histories: list[list[float]] = [[] for _ in range(self.n_arms)]

    def select(self, t, context=None):
        unplayed = [i for i, h in enumerate(self.histories) if not h]
        if unplayed:
            return PolicyDecision((unplayed[int(self.rng.integers(len(unplayed)))],))
        return PolicyDecision((besa_tournament(self.histories, self.rng),))

    def update(self, t, arms, rewards, context=None):
        for a, r in zip(arms, rewards):
            self.histories[a].append(float(r))
