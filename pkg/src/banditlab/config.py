"""Experiment configuration: TOML ingestion, policy and environment registries.

A config file has three tables::

    [experiment]
    horizon = 10000
    replications = 200
    seed = 1
    metrics = ["ee", "ep", "suboptimal"]
    bounds = [{family = "ucb1-log"}]

    [policy]
    name = "ucb1"            # see `list-policies`
    params = {}

    [environment]
    kind = "bernoulli"
    means = [0.9, 0.6]
"""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import DomainError, Policy
from .environments import (MEAN_FUNCTIONS, AdversarialMatrixEnv, Bernoulli, ContextualLinearEnv, ContinuumEnv,
                           DriftingEnv, Gaussian, StochasticEnv, SwitchingEnv)
from .policies import adversarial, contextual, extended, nonstationary, sampling, semiuniform, ucb


class ConfigError(DomainError):
    """Invalid or inconsistent experiment configuration."""


METRICS = ("ee", "ep", "suboptimal", "stat_lo", "stat_hi", "weak")
BOUND_FAMILIES = ("ucb1-log", "ucb2-log", "moss-minimax", "generic-logarithmic", "generic-sqrt")


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------


def _arms(family: str, means, sigma: float = 1.0, bounds=None):
    if family == "bernoulli":
        return [Bernoulli(float(p)) for p in means]
    if family == "gaussian":
        return [Gaussian(float(m), float(sigma), tuple(bounds) if bounds else None) for m in means]
    raise ConfigError(f"unknown arm family {family!r}")


def _env_bernoulli(p, horizon, rng):
    return StochasticEnv.bernoulli(p["means"])


def _env_gaussian(p, horizon, rng):
    return StochasticEnv(_arms("gaussian", p["means"], p.get("sigma", 1.0), p.get("bounds")))


def _env_switching(p, horizon, rng):
    fam = p.get("family", "bernoulli")
    return SwitchingEnv([(int(s["start"]), _arms(fam, s["means"], p.get("sigma", 1.0), p.get("bounds")))
                         for s in p["segments"]])


def _env_drifting(p, horizon, rng):
    fam = p.get("family", "bernoulli")
    return DriftingEnv(_arms(fam, p["means"], p.get("sigma", 1.0), p.get("bounds")), p["slopes"])


def _env_adversarial(p, horizon, rng):
    if "matrix" in p:
        return AdversarialMatrixEnv(p["matrix"])
    return AdversarialMatrixEnv.fixed_best(horizon, int(p["n_arms"]), rng, int(p.get("best", 0)),
                                           float(p.get("best_p", 0.6)), float(p.get("other_p", 0.4)))


def _env_contextual(p, horizon, rng):
    return ContextualLinearEnv(p["theta"], float(p.get("noise_sigma", 0.1)))


def _env_continuum(p, horizon, rng):
    name = p.get("function", "triangle")
    if name not in MEAN_FUNCTIONS:
        raise ConfigError(f"unknown mean function {name!r}; known: {sorted(MEAN_FUNCTIONS)}")
    return ContinuumEnv(MEAN_FUNCTIONS[name](**p.get("function_params", {})), p.get("noise", "bernoulli"),
                        float(p.get("sigma", 0.1)))


ENVIRONMENTS: dict[str, Callable] = {
    "bernoulli": _env_bernoulli,
    "gaussian": _env_gaussian,
    "switching": _env_switching,
    "drifting": _env_drifting,
    "adversarial": _env_adversarial,
    "contextual": _env_contextual,
    "continuum": _env_continuum,
}


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolicyEntry:
    name: str
    family: str
    build: Callable[..., Policy]
    contextual: bool = False
    continuum: bool = False
    two_arms: bool = False
    summary: str = ""


def _schedule(spec, n_arms, horizon):
    if isinstance(spec, (int, float)):
        return semiuniform.Constant(float(spec))
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return semiuniform.Constant(float(spec["eps0"]))
    if kind == "vermorel":
        return semiuniform.VermorelDecreasing(float(spec["eps0"]))
    if kind == "greedymix":
        return semiuniform.GreedyMix(float(spec["d"]), n_arms)
    if kind == "epsilon-n":
        return semiuniform.EpsilonN(float(spec["c"]), float(spec["d"]), n_arms)
    raise ConfigError(f"unknown epsilon schedule {kind!r}")


def _experts(kind, n_arms, env):
    if kind == "arms":
        return adversarial.point_mass_experts(n_arms)
    if kind == "arms+uniform":
        return adversarial.point_mass_experts(n_arms) + [adversarial.constant_expert(np.full(n_arms, 1.0 / n_arms))]
    if kind == "linear":
        if not getattr(env, "contextual", False):
            raise ConfigError("linear experts need a contextual environment")
        return [adversarial.linear_context_expert(env.theta)] + adversarial.point_mass_experts(n_arms)
    raise ConfigError(f"unknown expert set {kind!r}")


def _epoch(p, k, h, rng, env):
    inner = dict(p.get("inner", {"name": "ucb1"}))
    name = inner.pop("name")
    inner_params = inner.pop("params", inner)
    entry = policy_entry(name)
    return semiuniform.EpochWrapper(k, lambda n, length, g: entry.build(dict(inner_params), n, length, g, env),
                                    int(p.get("epoch_length", h)), rng)


def _linear(cls):
    def build(p, k, h, rng, env):
        return cls(k, env.d, rng=rng, **p)
    return build


def _simple(cls):
    return lambda p, k, h, rng, env: cls(k, rng=rng, **p)


def _horizon(cls):
    return lambda p, k, h, rng, env: cls(k, horizon=p.pop("horizon", h), rng=rng, **p)


POLICY_ENTRIES = [
    PolicyEntry("epsilon-greedy", "semi-uniform",
                lambda p, k, h, rng, env: semiuniform.EpsilonGreedy(k, _schedule(p.get("epsilon", 0.1), k, h), rng),
                summary="epsilon-greedy with constant, Vermorel, GreedyMix or epsilon_n schedules"),
    PolicyEntry("epsilon-first", "semi-uniform",
                lambda p, k, h, rng, env: semiuniform.EpsilonFirstPolicy(k, float(p.get("eps0", 0.1)), h, rng),
                summary="uniform exploration for ceil(eps0 H) steps, then commit"),
    PolicyEntry("epoch", "semi-uniform", _epoch, summary="restart an inner policy every epoch_length steps"),
    PolicyEntry("ucb1", "ucb", _simple(ucb.UCB1), summary="UCB1"),
    PolicyEntry("ucb2", "ucb", _simple(ucb.UCB2), summary="UCB2 with epochs (alpha)"),
    PolicyEntry("ucb-tuned", "ucb", _simple(ucb.UCBTuned), summary="UCB-Tuned variance-aware padding"),
    PolicyEntry("moss", "ucb", _horizon(ucb.MOSS), summary="MOSS (horizon-aware padding)"),
    PolicyEntry("kl-ucb", "ucb", _simple(ucb.KLUCB), summary="KL-UCB for Bernoulli rewards (c)"),
    PolicyEntry("bayes-ucb", "ucb", _simple(ucb.BayesUCB), summary="Bayes-UCB posterior quantile index"),
    PolicyEntry("thompson", "sampling", _simple(sampling.ThompsonSampling),
                summary="Thompson sampling (bernoulli/gaussian, optional optimism)"),
    PolicyEntry("poker", "sampling", _horizon(sampling.Poker), summary="POKER price-of-knowledge index"),
    PolicyEntry("besa", "sampling", _simple(sampling.BESA), summary="BESA sub-sampling tournament"),
    PolicyEntry("exp3", "adversarial", _simple(adversarial.Exp3), summary="Exp3 exponential weights"),
    PolicyEntry("exp4", "adversarial",
                lambda p, k, h, rng, env: adversarial.Exp4(k, _experts(p.pop("experts", "arms"), k, env), rng=rng,
                                                           **p),
                summary="Exp4 with expert advice (experts = arms | arms+uniform | linear)"),
    PolicyEntry("exp4p", "adversarial",
                lambda p, k, h, rng, env: adversarial.Exp4P(k, _experts(p.pop("experts", "arms"), k, env), h,
                                                            rng=rng, **p),
                summary="Exp4.P high-probability variant"),
    PolicyEntry("sao", "adversarial", _horizon(adversarial.SAO), two_arms=True,
                summary="two-arm stochastic-and-adversarial hybrid"),
    PolicyEntry("linucb", "contextual", _linear(contextual.LinUCB), contextual=True, summary="LinUCB"),
    PolicyEntry("lints", "contextual", _linear(contextual.LinTS), contextual=True, summary="linear Thompson"),
    PolicyEntry("lints-decay", "contextual", _linear(contextual.DecayedLinTS), contextual=True,
                summary="linear Thompson with time-decayed weighted least squares"),
    PolicyEntry("d-ucb", "nonstationary", _simple(nonstationary.DiscountedUCB), summary="discounted UCB(-Tuned)"),
    PolicyEntry("sw-ucb", "nonstationary", _simple(nonstationary.SlidingWindowUCB),
                summary="sliding-window UCB(-Tuned)"),
    PolicyEntry("adapt-eve", "nonstationary", _simple(nonstationary.AdaptEvE),
                summary="UCB-Tuned with Page-Hinkley restarts arbitrated by a meta-bandit"),
    PolicyEntry("exp3r", "nonstationary", _simple(nonstationary.Exp3R), summary="Exp3 with drift-triggered resets"),
    PolicyEntry("kalman", "nonstationary", _simple(nonstationary.KalmanBandit),
                summary="random-walk Kalman filter per arm"),
    PolicyEntry("hoo", "continuum", lambda p, k, h, rng, env: extended.HOO(None, rng=rng, **p), continuum=True,
                summary="hierarchical optimistic optimisation on [0, 1]"),
    PolicyEntry("mp-ts", "multi-play", _simple(extended.MPTS), summary="multi-play Thompson (m)"),
    PolicyEntry("imp-ts", "multi-play", _simple(extended.IMPTS), summary="improved multi-play Thompson (m)"),
]

POLICIES: dict[str, PolicyEntry] = {e.name: e for e in POLICY_ENTRIES}


def policy_entry(name: str) -> PolicyEntry:
    try:
        return POLICIES[name]
    except KeyError:
        raise ConfigError(f"unknown policy {name!r}; run list-policies") from None


# ---------------------------------------------------------------------------
# Experiment config
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    policy: dict
    environment: dict
    horizon: int
    replications: int = 1
    seed: int = 0
    metrics: list = field(default_factory=lambda: ["ee", "ep", "suboptimal"])
    conf: float = 0.9
    stat_method: str = "parametric"
    bootstrap_b: int = 1000
    bounds: list = field(default_factory=list)
    out: str = "results"
    svg: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        exp = dict(data.get("experiment", {}))
        if "policy" not in data or "environment" not in data:
            raise ConfigError("config needs [policy] and [environment] tables")
        if "horizon" not in exp:
            raise ConfigError("experiment.horizon is required")
        known = {f for f in cls.__dataclass_fields__} - {"policy", "environment"}
        extra = set(exp) - known
        if extra:
            raise ConfigError(f"unknown experiment keys: {sorted(extra)}")
        cfg = cls(policy=dict(data["policy"]), environment=dict(data["environment"]), **exp)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {"experiment": {k: v for k, v in d.items() if k not in ("policy", "environment")},
                "policy": d["policy"], "environment": d["environment"]}

    @property
    def policy_name(self) -> str:
        return str(self.policy.get("name", ""))

    @property
    def env_kind(self) -> str:
        return str(self.environment.get("kind", ""))

    def validate(self) -> None:
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ConfigError("horizon must be an integer >= 1")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise ConfigError("replications must be an integer >= 1")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        bad = [m for m in self.metrics if m not in METRICS]
        if bad or not self.metrics:
            raise ConfigError(f"metrics must be a non-empty subset of {METRICS}, got {self.metrics}")
        if not 0.0 <= self.conf < 1.0:
            raise ConfigError("conf must lie in [0, 1)")
        if self.stat_method not in ("parametric", "bootstrap"):
            raise ConfigError("stat_method must be 'parametric' or 'bootstrap'")
        for b in self.bounds:
            if b.get("family") not in BOUND_FAMILIES:
                raise ConfigError(f"unknown bound family {b.get('family')!r}; known: {BOUND_FAMILIES}")
        if self.env_kind not in ENVIRONMENTS:
            raise ConfigError(f"unknown environment kind {self.env_kind!r}; known: {sorted(ENVIRONMENTS)}")
        entry = policy_entry(self.policy_name)
        try:
            env = build_environment(self, np.random.default_rng(0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"environment {self.env_kind!r}: {exc}") from exc
        self._check_pair(entry, env)
        if "weak" in self.metrics and not getattr(env, "adversarial", False):
            raise ConfigError(f"weak regret needs an adversarial environment, not {self.env_kind!r}")
        try:
            build_policy(self, env, np.random.default_rng(0))
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"policy {self.policy_name!r} on environment {self.env_kind!r}: {exc}") from exc

    def _check_pair(self, entry: PolicyEntry, env) -> None:
        pair = f"policy {entry.name!r} is incompatible with environment {self.env_kind!r}"
        is_continuum = getattr(env, "n_arms", None) is None
        if entry.continuum != is_continuum:
            need = "a continuum environment" if entry.continuum else "a finite-armed policy"
            raise ConfigError(f"{pair}: needs {need}")
        if entry.contextual and not getattr(env, "contextual", False):
            raise ConfigError(f"{pair}: a contextual policy needs a contextual environment")
        if entry.two_arms and env.n_arms != 2:
            raise ConfigError(f"{pair}: the policy is defined for exactly two arms")
        m = int(self.policy.get("params", {}).get("m", 1))
        if not is_continuum and not 1 <= m <= env.n_arms:
            raise ConfigError(f"{pair}: multi-play m={m} must lie in [1, K={env.n_arms}]")
        if getattr(env, "adversarial", False) and self.horizon > env.horizon:
            raise ConfigError(f"{pair}: horizon {self.horizon} exceeds the reward matrix length {env.horizon}")


def build_environment(cfg: ExperimentConfig, rng: np.random.Generator):
    params = {k: v for k, v in cfg.environment.items() if k != "kind"}
    return ENVIRONMENTS[cfg.env_kind](params, cfg.horizon, rng)


def build_policy(cfg: ExperimentConfig, env, rng: np.random.Generator) -> Policy:
    entry = policy_entry(cfg.policy_name)
    params = dict(cfg.policy.get("params", {}))
    return entry.build(params, getattr(env, "n_arms", None), cfg.horizon, rng, env)
