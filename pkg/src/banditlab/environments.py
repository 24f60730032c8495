"""Reward-generating environments and their oracles.

Every finite-armed environment exposes the same small surface:

* ``means(t, context)`` -- expected reward of each arm at step ``t``
* ``rewards(t, rng, context)`` -- one realized reward for *every* arm at ``t``
* ``oracle_best(t, m=1, context)`` and ``gap(arm, t, context)``

Drawing a full row per step (rather than only the played arm) makes the
realized reward sequence independent of the policy, so two policies run on the
same stream see common random numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import DomainError


# ---------------------------------------------------------------------------
# Arm distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"Bernoulli p must lie in [0, 1], got {self.p}")

    @property
    def mean(self) -> float:
        return self.p


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float = 1.0
    bounds: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.sigma < 0:
            raise DomainError(f"Gaussian sigma must be >= 0, got {self.sigma}")
        if self.bounds is not None and self.bounds[0] > self.bounds[1]:
            raise DomainError(f"empty bounds {self.bounds}")

    @property
    def mean(self) -> float:
        # Truncation is a clip, so the expectation of a clipped normal.
        if self.bounds is None or self.sigma == 0:
            return float(np.clip(self.mu, *self.bounds)) if self.bounds else self.mu
        from scipy.stats import norm

        lo, hi = self.bounds
        a, b = (lo - self.mu) / self.sigma, (hi - self.mu) / self.sigma
        with np.errstate(over="ignore"):
            inside = self.mu * (norm.cdf(b) - norm.cdf(a)) + self.sigma * (norm.pdf(a) - norm.pdf(b))
        return float(lo * norm.cdf(a) + inside + hi * norm.sf(b))


ArmSpec = Bernoulli | Gaussian


def _draw(specs: Sequence[ArmSpec], n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` rows of rewards, one column per arm spec.

    Bernoulli columns come from one uniform per cell, Gaussian columns from one
    standard normal per cell; both blocks are drawn for every row so the
    stream position does not depend on the arm kinds.
    """
    k = len(specs)
    u = rng.random((n, k))
    z = rng.standard_normal((n, k))
    out = np.empty((n, k))
    for i, spec in enumerate(specs):
        if isinstance(spec, Bernoulli):
            out[:, i] = (u[:, i] < spec.p).astype(float)
        else:
            col = spec.mu + spec.sigma * z[:, i]
            out[:, i] = np.clip(col, *spec.bounds) if spec.bounds else col
    return out


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------


class Environment:
    """Finite-armed environment base class."""

    n_arms: int
    contextual = False
    adversarial = False
    stationary = True

    def means(self, t: int, context=None) -> np.ndarray:
        raise NotImplementedError

    def mean_matrix(self, steps: np.ndarray, contexts: Optional[Sequence] = None) -> np.ndarray:
        """Expected rewards for many steps at once, shape (len(steps), K)."""
        if contexts is None:
            contexts = [None] * len(steps)
        return np.array([self.means(int(t), c) for t, c in zip(steps, contexts)])

    def rewards(self, t: int, rng: np.random.Generator, context=None) -> np.ndarray:
        return self.reward_table(t, 1, rng, [context])[0]

    def reward_table(self, start: int, n: int, rng: np.random.Generator, contexts=None) -> np.ndarray:
        """Realized rewards for steps ``start .. start+n-1`` as an (n, K) array."""
        raise NotImplementedError

    def context(self, t: int, rng: np.random.Generator):
        return None

    def sample_reward(self, arm: int, t: int, rng: np.random.Generator, context=None) -> float:
        self._check(arm, t)
        return float(self.rewards(t, rng, context)[arm])

    def oracle_best(self, t: int, m: int = 1, context=None):
        """Best arm (or top-``m`` arm set) at step ``t`` and its expected value."""
        mu = self.means(t, context)
        if m == 1:
            i = int(np.argmax(mu))
            return i, float(mu[i])
        if not 1 <= m <= self.n_arms:
            raise DomainError(f"m={m} must lie in [1, {self.n_arms}]")
        top = np.argsort(-mu, kind="stable")[:m]
        return tuple(sorted(int(i) for i in top)), float(mu[top].sum())

    def gap(self, arm: int, t: int, context=None) -> float:
        self._check(arm, t)
        mu = self.means(t, context)
        return float(mu.max() - mu[arm])

    def _check(self, arm: int, t: int) -> None:
        if not 0 <= arm < self.n_arms:
            raise DomainError(f"arm {arm} outside [0, {self.n_arms})")
        if t < 1:
            raise DomainError(f"steps are 1-based, got t={t}")


class StochasticEnv(Environment):
    """Stationary independent arms."""

    def __init__(self, arms: Sequence[ArmSpec]):
        if not arms:
            raise DomainError("need at least one arm")
        self.arms = list(arms)
        self.n_arms = len(self.arms)
        self._mu = np.array([a.mean for a in self.arms])

    @classmethod
    def bernoulli(cls, ps: Sequence[float]) -> "StochasticEnv":
        return cls([Bernoulli(float(p)) for p in ps])

    @classmethod
    def gaussian(cls, mus: Sequence[float], sigma: float = 1.0, bounds=None) -> "StochasticEnv":
        return cls([Gaussian(float(m), sigma, bounds) for m in mus])

    def means(self, t, context=None):
        return self._mu.copy()

    def mean_matrix(self, steps, contexts=None):
        return np.broadcast_to(self._mu, (len(steps), self.n_arms)).copy()

    def reward_table(self, start, n, rng, contexts=None):
        return _draw(self.arms, n, rng)


class SwitchingEnv(Environment):
    """Piecewise-stationary arms with abrupt breakpoints.

    ``segments`` is a list of ``(start_step, arm_specs)`` with the first start
    equal to 1 and strictly increasing starts.
    """

    stationary = False

    def __init__(self, segments: Sequence[tuple[int, Sequence[ArmSpec]]]):
        starts = [int(s) for s, _ in segments]
        if not starts or starts[0] != 1:
            raise DomainError("the first segment must start at step 1")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise DomainError("segment starts must be strictly increasing")
        ks = {len(a) for _, a in segments}
        if len(ks) != 1:
            raise DomainError("every segment must list the same number of arms")
        self.starts = np.array(starts)
        self.segments = [list(a) for _, a in segments]
        self.n_arms = ks.pop()
        self._mu = np.array([[a.mean for a in seg] for seg in self.segments])

    @classmethod
    def bernoulli(cls, segments: Sequence[tuple[int, Sequence[float]]]) -> "SwitchingEnv":
        return cls([(s, [Bernoulli(float(p)) for p in ps]) for s, ps in segments])

    def _segment(self, t) -> np.ndarray:
        return np.searchsorted(self.starts, t, side="right") - 1

    def means(self, t, context=None):
        return self._mu[self._segment(t)].copy()

    def mean_matrix(self, steps, contexts=None):
        return self._mu[self._segment(np.asarray(steps))]

    def reward_table(self, start, n, rng, contexts=None):
        steps = np.arange(start, start + n)
        seg = self._segment(steps)
        out = np.empty((n, self.n_arms))
        # Draw per segment in step order so the stream layout is fixed.
        for s in np.unique(seg):
            rows = seg == s
            out[rows] = _draw(self.segments[s], int(rows.sum()), rng)
        return out


class DriftingEnv(Environment):
    """Arms whose mean moves linearly with time.

    Bernoulli parameters are clamped to [0, 1]; Gaussian means drift freely.
    """

    stationary = False

    def __init__(self, arms: Sequence[ArmSpec], slopes: Sequence[float]):
        if len(arms) != len(slopes):
            raise DomainError("one slope per arm")
        self.arms = list(arms)
        self.slopes = np.asarray(slopes, dtype=float)
        self.n_arms = len(self.arms)
        self._base = np.array([a.mean for a in self.arms])
        self._bern = np.array([isinstance(a, Bernoulli) for a in self.arms])

    def _mean_at(self, steps) -> np.ndarray:
        steps = np.asarray(steps, dtype=float)[..., None]
        mu = self._base + self.slopes * steps
        return np.where(self._bern, np.clip(mu, 0.0, 1.0), mu)

    def means(self, t, context=None):
        return self._mean_at(t)

    def mean_matrix(self, steps, contexts=None):
        return self._mean_at(steps)

    def reward_table(self, start, n, rng, contexts=None):
        mu = self._mean_at(np.arange(start, start + n))
        u = rng.random((n, self.n_arms))
        z = rng.standard_normal((n, self.n_arms))
        sig = np.array([0.0 if b else a.sigma for a, b in zip(self.arms, self._bern)])
        return np.where(self._bern, (u < mu).astype(float), mu + sig * z)


class AdversarialMatrixEnv(Environment):
    """Oblivious adversary: an H x K reward matrix fixed before play."""

    adversarial = True
    stationary = False

    def __init__(self, rewards):
        r = np.asarray(rewards, dtype=float)
        if r.ndim != 2:
            raise DomainError("reward matrix must be 2-D (H x K)")
        if (r < 0).any() or (r > 1).any():
            raise DomainError("adversarial rewards must lie in [0, 1]")
        self.matrix = r
        self.horizon, self.n_arms = r.shape

    @classmethod
    def fixed_best(cls, horizon: int, n_arms: int, rng: np.random.Generator,
                   best: int = 0, best_p: float = 0.6, other_p: float = 0.4) -> "AdversarialMatrixEnv":
        """Random 0/1 matrix whose column ``best`` has the highest rate."""
        p = np.full(n_arms, other_p)
        p[best] = best_p
        return cls((rng.random((horizon, n_arms)) < p).astype(float))

    def _row(self, t):
        if not 1 <= t <= self.horizon:
            raise DomainError(f"step {t} beyond the matrix horizon {self.horizon}")
        return self.matrix[t - 1]

    def means(self, t, context=None):
        return self._row(t).copy()

    def mean_matrix(self, steps, contexts=None):
        steps = np.asarray(steps)
        if len(steps) and (steps.min() < 1 or steps.max() > self.horizon):
            raise DomainError("steps beyond the matrix horizon")
        return self.matrix[steps - 1]

    def reward_table(self, start, n, rng, contexts=None):
        self._row(start)
        self._row(start + n - 1)
        return self.matrix[start - 1:start - 1 + n].copy()

    def best_fixed_arm(self, horizon: Optional[int] = None) -> tuple[int, float]:
        """Arm with the largest column sum over the first ``horizon`` rows."""
        totals = self.matrix[:horizon].sum(axis=0)
        i = int(np.argmax(totals))
        return i, float(totals[i])


class ContextualLinearEnv(Environment):
    """Linear contextual arms: ``E[x_i | c] = theta_i . c``.

    One unit-norm world context ``c`` is drawn per step and shown to the
    policy; arm ``i`` has its own coefficient vector ``theta_i``.
    """

    contextual = True
    stationary = False

    def __init__(self, theta, noise_sigma: float = 0.1,
                 sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None):
        th = np.asarray(theta, dtype=float)
        if th.ndim != 2:
            raise DomainError("theta must be (K, d)")
        if noise_sigma < 0:
            raise DomainError("noise_sigma must be >= 0")
        self.theta = th
        self.n_arms, self.d = th.shape
        self.noise_sigma = float(noise_sigma)
        self.sampler = sampler or unit_sphere_positive

    def context(self, t, rng):
        return self.sampler(rng, self.d)

    def means(self, t, context=None):
        if context is None:
            raise DomainError("contextual environment needs a context")
        return self.theta @ np.asarray(context, dtype=float)

    def mean_matrix(self, steps, contexts=None):
        return np.asarray(contexts, dtype=float) @ self.theta.T

    def reward_table(self, start, n, rng, contexts=None):
        mu = self.mean_matrix(None, contexts)
        return mu + self.noise_sigma * rng.standard_normal(mu.shape)


def unit_sphere_positive(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform direction on the positive orthant of the unit sphere."""
    v = np.abs(rng.standard_normal(d))
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# Continuum arms
# ---------------------------------------------------------------------------


def triangle(peak: float = 0.7, height: float = 0.9) -> Callable[[np.ndarray], np.ndarray]:
    def f(x):
        return np.clip(height - np.abs(np.asarray(x, dtype=float) - peak), 0.0, 1.0)

    f.argmax = (peak, height)
    return f


def double_bump(x):
    x = np.asarray(x, dtype=float)
    return 0.8 * np.exp(-((x - 0.25) ** 2) / 0.005) + 0.95 * np.exp(-((x - 0.8) ** 2) / 0.002)


double_bump.argmax = None

MEAN_FUNCTIONS: dict[str, Callable] = {"triangle": triangle, "double_bump": lambda: double_bump}


@dataclass
class ContinuumEnv:
    """Arms indexed by ``x`` in [0, 1] with mean ``f(x)`` in [0, 1]."""

    f: Callable[[np.ndarray], np.ndarray]
    noise: str = "bernoulli"
    sigma: float = 0.1
    _grid_best: Optional[tuple[float, float]] = field(default=None, init=False, repr=False)

    contextual = False
    adversarial = False
    stationary = True
    n_arms = None

    def __post_init__(self):
        if self.noise not in ("bernoulli", "gaussian"):
            raise DomainError(f"unknown noise {self.noise!r}")
        grid = np.linspace(0.0, 1.0, 10_001)
        vals = self.f(grid)
        if (vals < 0).any() or (vals > 1).any():
            raise DomainError("mean function must map [0, 1] into [0, 1]")

    def mean(self, x) -> np.ndarray:
        return self.f(x)

    def sample_reward(self, x: float, t: int, rng: np.random.Generator) -> float:
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"point {x} outside [0, 1]")
        mu = float(self.f(x))
        if self.noise == "bernoulli":
            return float(rng.random() < mu)
        return mu + self.sigma * float(rng.standard_normal())

    def oracle_best(self, t: int = 1, m: int = 1, context=None) -> tuple[float, float]:
        known = getattr(self.f, "argmax", None)
        if known is not None:
            return float(known[0]), float(known[1])
        if self._grid_best is None:
            from scipy.optimize import minimize_scalar

            grid = np.linspace(0.0, 1.0, 100_001)
            x0 = grid[int(np.argmax(self.f(grid)))]
            res = minimize_scalar(lambda x: -float(self.f(x)), bounds=(max(0, x0 - 1e-5), min(1, x0 + 1e-5)),
                                  method="bounded", options={"xatol": 1e-12})
            self._grid_best = (float(res.x), float(-res.fun))
        return self._grid_best

    def gap(self, x: float, t: int = 1, context=None) -> float:
        return self.oracle_best(t)[1] - float(self.f(x))
