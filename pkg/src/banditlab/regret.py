"""Regret measures computed from a pull log and the environment's oracle.

All series are cumulative and indexed by 1-based step: entry ``t - 1`` holds
the value after step ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import norm

from .core import DomainError, PullLog, make_rng

TIE_TOL = 1e-12


@dataclass
class RegretSeries:
    """Cumulative regret measures for one run.

    ``stat_lo``/``stat_hi`` are NaN and ``stat_defined`` is False when the
    data cannot support the requested interval.
    """

    ee: np.ndarray
    ep: np.ndarray
    suboptimal: np.ndarray
    stat_lo: np.ndarray
    stat_hi: np.ndarray
    stat_defined: bool = True
    weak: Optional[np.ndarray] = None
    oracle: dict = field(default_factory=dict)

    def as_dict(self) -> dict[str, np.ndarray]:
        out = {"ee": self.ee, "ep": self.ep, "suboptimal": self.suboptimal,
               "stat_lo": self.stat_lo, "stat_hi": self.stat_hi}
        if self.weak is not None:
            out["weak"] = self.weak
        return out


def _is_continuum(env) -> bool:
    return getattr(env, "n_arms", None) is None


def _step_values(log: PullLog, env) -> tuple[np.ndarray, np.ndarray]:
    """Per-step oracle value and expected value of what was played."""
    if len(log) == 0:
        raise DomainError("empty log")
    if _is_continuum(env):
        best = env.oracle_best()[1]
        x = np.asarray(log.arms, dtype=float)
        return np.full(x.size, best), np.asarray(env.mean(x), dtype=float)
    mu = env.mean_matrix(log.steps, log.contexts)
    arms = log.arm_matrix()
    m = arms.shape[1]
    if m == 1:
        best = mu.max(axis=1)
    else:
        best = -np.sort(-mu, axis=1)[:, :m].sum(axis=1)
    chosen = np.take_along_axis(mu, arms, axis=1).sum(axis=1)
    return best, chosen


def expected_expected_regret(log: PullLog, env) -> np.ndarray:
    """Cumulative sum of (oracle expectation - expectation of the played arm(s))."""
    best, chosen = _step_values(log, env)
    return np.cumsum(best - chosen)


def expected_payoff_regret(log: PullLog, env) -> np.ndarray:
    """Like :func:`expected_expected_regret` but charged with the realized rewards."""
    best, _ = _step_values(log, env)
    return np.cumsum(best - log.reward_matrix().sum(axis=1))


def suboptimal_plays(log: PullLog, env) -> np.ndarray:
    """Cumulative count of steps where the play fell short of the oracle.

    Any expectation-maximal choice counts as optimal.
    """
    best, chosen = _step_values(log, env)
    return np.cumsum(chosen < best - TIE_TOL * np.maximum(1.0, np.abs(best))).astype(np.int64)


def weak_regret(log: PullLog, env, horizon: Optional[int] = None) -> np.ndarray:
    """Regret against the single arm with the largest total over the horizon.

    Uses the environment's expected-reward table, which for an oblivious
    adversary is the reward matrix itself.
    """
    if _is_continuum(env):
        raise DomainError("weak regret needs a finite arm set")
    if log.plays != 1:
        raise DomainError("weak regret is defined for single-play logs")
    mu = env.mean_matrix(log.steps, log.contexts)
    n = len(log) if horizon is None else horizon
    best = int(np.argmax(mu[:n].sum(axis=0)))
    return np.cumsum(mu[:, best] - log.reward_matrix()[:, 0])


def arm_intervals(rewards_by_arm: list[np.ndarray], conf: float, method: str = "parametric", B: int = 1000,
                  rng=None) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Per-arm (L, U) intervals for the arm means at level ``conf``.

    Returns None when an arm has too few observations (two for the Normal
    interval, one for the bootstrap).
    """
    if not 0.0 <= conf < 1.0:
        raise DomainError("confidence level must lie in [0, 1)")
    if method not in ("parametric", "bootstrap"):
        raise DomainError(f"unknown interval method {method!r}")
    need = 2 if method == "parametric" else 1
    if any(len(r) < need for r in rewards_by_arm):
        return None
    k = len(rewards_by_arm)
    lo, hi = np.empty(k), np.empty(k)
    if method == "parametric":
        z = norm.ppf(0.5 + conf / 2.0)
        for i, r in enumerate(rewards_by_arm):
            half = z * np.std(r, ddof=1) / math.sqrt(len(r))
            lo[i], hi[i] = r.mean() - half, r.mean() + half
        return lo, hi
    rng = make_rng(rng)
    q = [50.0 * (1.0 - conf), 50.0 * (1.0 + conf)]
    for i, r in enumerate(rewards_by_arm):
        boot = r[rng.integers(0, len(r), size=(B, len(r)))].mean(axis=1)
        lo[i], hi[i] = np.percentile(boot, q)
    return lo, hi


def statistical_regret(log: PullLog, conf: float, method: str = "parametric", B: int = 1000, rng=None,
                       n_arms: Optional[int] = None) -> tuple[np.ndarray, np.ndarray, bool]:
    """Regret against interval estimates of the best arm built from the whole log.

    The final-time per-arm intervals are applied to every step:
    ``lo = sum_j (max_i L_i - x_j)`` and ``hi = sum_j (max_i U_i - x_j)``.
    The third element is False (and both series NaN) when the intervals are
    undefined.
    """
    arms = log.arm_matrix()
    k = int(arms.max()) + 1 if n_arms is None else n_arms
    realized = log.reward_matrix()
    m = realized.shape[1]
    iv = arm_intervals(log.rewards_by_arm(k), conf, method, B, rng)
    if iv is None:
        nan = np.full(len(log), np.nan)
        return nan, nan.copy(), False
    lo, hi = iv
    got = realized.sum(axis=1)
    top = (lambda v: np.sort(v)[::-1][:m].sum())
    return np.cumsum(top(lo) - got), np.cumsum(top(hi) - got), True


def regret_series(log: PullLog, env, conf: float = 0.9, method: str = "parametric", B: int = 1000,
                  rng=None) -> RegretSeries:
    """All regret measures for one run."""
    best, chosen = _step_values(log, env)
    ee = np.cumsum(best - chosen)
    realized = log.reward_matrix().sum(axis=1)
    ep = np.cumsum(best - realized)
    sub = np.cumsum(chosen < best - TIE_TOL * np.maximum(1.0, np.abs(best))).astype(np.int64)
    if _is_continuum(env):
        nan = np.full(len(log), np.nan)
        lo, hi, ok = nan, nan.copy(), False
    else:
        lo, hi, ok = statistical_regret(log, conf, method, B, rng, env.n_arms)
    weak = weak_regret(log, env) if getattr(env, "adversarial", False) else None
    return RegretSeries(ee, ep, sub, lo, hi, ok, weak, {"best_value": best})
