"""Optimistic index policies: UCB1, UCB2, UCB-Tuned, MOSS, KL-UCB and Bayes-UCB."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.stats import norm

from ..core import ArmStats, DomainError, IndexPolicy, PolicyDecision, argmax_tiebreak

BISECTION_TOL = 1e-9


# ---------------------------------------------------------------------------
# Index functions
# ---------------------------------------------------------------------------


def ucb1_index(mean: float, n_i: int, t: int) -> float:
    if n_i < 1:
        raise DomainError("UCB1 index needs n_i >= 1; unplayed arms use the +inf sentinel")
    return mean + math.sqrt(2.0 * math.log(t) / n_i)


def ucb2_tau(r: int, alpha: float) -> int:
    return math.ceil((1.0 + alpha) ** r)


def ucb2_epoch_plays(r_i: int, alpha: float) -> int:
    """Number of consecutive plays in epoch ``r_i``: ceil((1+a)^(r+1) - (1+a)^r)."""
    return max(1, math.ceil((1.0 + alpha) ** (r_i + 1) - (1.0 + alpha) ** r_i))


def ucb2_index(mean: float, r_i: int, n: int, alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise DomainError("UCB2 needs 0 < alpha < 1")
    tau = (1.0 + alpha) ** r_i
    return mean + math.sqrt((1.0 + alpha) * math.log(math.e * n / tau) / (2.0 * tau))


def ucb_tuned_index(stats: ArmStats, t: int) -> float:
    n = stats.count
    if n < 1:
        raise DomainError("UCB-Tuned index needs n_i >= 1")
    log_t = math.log(t)
    v = stats.sum_squares / n - stats.mean**2 + math.sqrt(2.0 * log_t / n)
    return stats.mean + math.sqrt(log_t / n * min(0.25, v))


def moss_index(mean: float, n_i: int, horizon: int, n_arms: int) -> float:
    if n_i < 1:
        raise DomainError("MOSS index needs n_i >= 1")
    return mean + math.sqrt(max(0.0, math.log(horizon / (n_arms * n_i))) / n_i)


def kl_div_bernoulli(p: float, q: float) -> float:
    """Bernoulli KL divergence d(p, q) with 0 log 0 = 0 and x log(x/0) = +inf."""
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise DomainError(f"KL arguments must lie in [0, 1], got ({p}, {q})")

    def term(x, y):
        if x == 0.0:
            return 0.0
        if y == 0.0:
            return math.inf
        return x * math.log(x / y)

    return term(p, q) + term(1.0 - p, 1.0 - q)


def kl_ucb_upper(mean: float, n_i: int, t: int, c: float = 0.0, tol: float = BISECTION_TOL) -> float:
    """Largest q in [mean, 1] with n_i * d(mean, q) <= ln t + c ln ln t.

    The ``ln ln t`` term is dropped for t < e.  d(mean, .) is increasing on
    [mean, 1), so bisection on that interval converges to the boundary.
    """
    if n_i < 1 or t < 1:
        raise DomainError("KL-UCB needs n_i >= 1 and t >= 1")
    mean = min(1.0, max(0.0, mean))
    rhs = math.log(t)
    if t >= math.e and c:
        rhs += c * math.log(math.log(t))
    budget = rhs / n_i
    if budget <= 0.0:
        return mean
    if kl_div_bernoulli(mean, 1.0) <= budget:
        return 1.0
    lo, hi = mean, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if kl_div_bernoulli(mean, mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class BetaPosterior:
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise DomainError("Beta parameters must be > 0")

    def update(self, r: float) -> "BetaPosterior":
        if not 0.0 <= r <= 1.0:
            raise DomainError("Beta/Bernoulli update needs a reward in [0, 1]")
        return BetaPosterior(self.a + r, self.b + 1.0 - r)

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)


def beta_quantile(a: float, b: float, level: float, tol: float = BISECTION_TOL) -> float:
    """Quantile of Beta(a, b) by bisection on the regularized incomplete beta."""
    if level <= 0.0:
        return 0.0
    if level >= 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if special.betainc(a, b, mid) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bayes_ucb_index(posterior: BetaPosterior, t: int) -> float:
    """The (1 - 1/t) quantile of the arm's Beta posterior."""
    if t < 1:
        raise DomainError("t must be >= 1")
    return beta_quantile(posterior.a, posterior.b, 1.0 - 1.0 / t)


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


class UCB1(IndexPolicy):
    name = "ucb1"

    def indices(self, t):
        return self.means + np.sqrt(2.0 * math.log(t) / self.counts)


class UCBTuned(IndexPolicy):
    name = "ucb-tuned"

    def indices(self, t):
        n = self.counts
        log_t = math.log(t)
        v = self.sum_squares / n - self.means**2 + np.sqrt(2.0 * log_t / n)
        return self.means + np.sqrt(log_t / n * np.minimum(0.25, v))


class MOSS(IndexPolicy):
    name = "moss"

    def __init__(self, n_arms, horizon: int, rng=None):
        super().__init__(n_arms, rng)
        if horizon < n_arms:
            raise DomainError("MOSS needs H >= K")
        self.horizon = int(horizon)

    def indices(self, t):
        n = self.counts
        return self.means + np.sqrt(np.maximum(0.0, np.log(self.horizon / (self.n_arms * n))) / n)


class KLUCB(IndexPolicy):
    name = "kl-ucb"

    def __init__(self, n_arms, c: float = 0.0, rng=None):
        super().__init__(n_arms, rng)
        if c < 0:
            raise DomainError("c must be >= 0")
        self.c = float(c)

    def indices(self, t):
        return np.array([kl_ucb_upper(m, int(n), t, self.c) for m, n in zip(self.means, self.counts)])


class UCB2(IndexPolicy):
    """UCB2: the chosen arm is played for a whole epoch before re-scoring."""

    name = "ucb2"

    def __init__(self, n_arms, alpha: float = 0.1, rng=None):
        super().__init__(n_arms, rng)
        if not 0.0 < alpha < 1.0:
            raise DomainError("UCB2 needs 0 < alpha < 1")
        self.alpha = float(alpha)
        self.epochs = np.zeros(self.n_arms, dtype=np.int64)
        self._current: int | None = None
        self._remaining = 0

    def indices(self, t):
        n = t - 1  # plays made so far
        tau = (1.0 + self.alpha) ** self.epochs
        return self.means + np.sqrt((1.0 + self.alpha) * np.maximum(0.0, np.log(math.e * n / tau)) / (2.0 * tau))

    def select(self, t, context=None):
        if self._remaining > 0:
            return PolicyDecision((self._current,))
        if (self.counts == 0).any():
            return super().select(t, context)
        s = self.indices(t)
        j = argmax_tiebreak(s, self.rng)
        self._current = j
        self._remaining = ucb2_epoch_plays(int(self.epochs[j]), self.alpha)
        self.epochs[j] += 1
        return PolicyDecision((j,), s)

    def update(self, t, arms, rewards, context=None):
        super().update(t, arms, rewards, context)
        if self._remaining > 0:
            self._remaining -= 1


class BayesUCB(IndexPolicy):
    """Bayes-UCB with a Beta/Bernoulli or Normal/known-variance model.

    ``likelihood="bernoulli"`` uses Beta(prior_a, prior_b) priors;
    ``likelihood="gaussian"`` uses Normal(prior_mean, prior_var) priors for the
    arm mean with known observation variance ``noise_var``.  Unplayed arms
    keep the +inf sentinel like every other index policy.
    """

    name = "bayes-ucb"

    def __init__(self, n_arms, likelihood: str = "bernoulli", prior_a: float = 1.0, prior_b: float = 1.0,
                 prior_mean: float = 0.0, prior_var: float = 1.0, noise_var: float = 1.0, rng=None):
        super().__init__(n_arms, rng)
        if likelihood not in ("bernoulli", "gaussian"):
            raise DomainError(f"unknown likelihood {likelihood!r}")
        self.likelihood = likelihood
        self.prior = (float(prior_a), float(prior_b)) if likelihood == "bernoulli" else (
            float(prior_mean), float(prior_var))
        self.noise_var = float(noise_var)

    def posteriors(self):
        n, s = self.counts, self.means * self.counts
        if self.likelihood == "bernoulli":
            return self.prior[0] + s, self.prior[1] + n - s
        m0, v0 = self.prior
        prec = 1.0 / v0 + n / self.noise_var
        return (m0 / v0 + s / self.noise_var) / prec, 1.0 / prec

    def indices(self, t):
        level = 1.0 - 1.0 / t
        if self.likelihood == "bernoulli":
            a, b = self.posteriors()
            return np.array([beta_quantile(x, y, level) for x, y in zip(a, b)])
        mu, var = self.posteriors()
        return mu + np.sqrt(var) * norm.ppf(level)
