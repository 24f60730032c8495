"""Replicated experiment runner, bound checks and result files.

Replication ``r`` owns ``RngStream(seed, r)``; its substreams are fixed:
0 for rewards and contexts, 1 for the policy, 2 for bootstrap resampling and
3 for building a randomized environment (e.g. an adversarial matrix).
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig, build_environment, build_policy
from .core import DomainError, Policy, PullLog, RngStream
from .regret import (expected_expected_regret, expected_payoff_regret, statistical_regret, suboptimal_plays,
                     weak_regret)

ENV_STREAM, POLICY_STREAM, METRIC_STREAM, BUILD_STREAM = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def simulate(policy: Policy, env, horizon: int, rng: np.random.Generator) -> PullLog:
    """Play ``horizon`` steps and return the log.

    Finite-armed environments pre-draw every context and then the full reward
    table, so realized rewards do not depend on the policy's choices.
    """
    arms, rewards, contexts = [], [], []
    if getattr(env, "n_arms", None) is None:
        for t in range(1, horizon + 1):
            x = policy.select(t).arm
            r = env.sample_reward(x, t, rng)
            policy.update(t, (x,), (r,))
            arms.append(x)
            rewards.append(r)
            contexts.append(None)
        return PullLog(arms, rewards, contexts)

    if getattr(env, "contextual", False):
        contexts = [env.context(t, rng) for t in range(1, horizon + 1)]
    else:
        contexts = [None] * horizon
    table = env.reward_table(1, horizon, rng, contexts if env.contextual else None)
    for t in range(1, horizon + 1):
        ctx = contexts[t - 1]
        chosen = policy.select(t, ctx).arms
        row = table[t - 1]
        if len(chosen) == 1:
            r = (float(row[chosen[0]]),)
            arms.append(chosen[0])
            rewards.append(r[0])
        else:
            r = tuple(float(row[a]) for a in chosen)
            arms.append(tuple(chosen))
            rewards.append(r)
        policy.update(t, chosen, r, ctx)
    return PullLog(arms, rewards, contexts)


@dataclass
class Replication:
    index: int
    series: dict[str, np.ndarray]
    recommendation: Optional[float] = None
    stat_defined: bool = True


def run_replication(cfg: ExperimentConfig, r: int) -> Replication:
    stream = RngStream(cfg.seed, r)
    env = build_environment(cfg, stream.generator(BUILD_STREAM))
    policy = build_policy(cfg, env, stream.generator(POLICY_STREAM))
    log = simulate(policy, env, cfg.horizon, stream.generator(ENV_STREAM))
    return _replication(cfg, r, log, env, policy, stream)


def _replication(cfg, r, log, env, policy, stream) -> Replication:
    wanted = set(cfg.metrics)
    series: dict[str, np.ndarray] = {}
    if "ee" in wanted:
        series["ee"] = expected_expected_regret(log, env)
    if "ep" in wanted:
        series["ep"] = expected_payoff_regret(log, env)
    if "suboptimal" in wanted:
        series["suboptimal"] = suboptimal_plays(log, env).astype(float)
    if "weak" in wanted:
        series["weak"] = weak_regret(log, env)
    defined = True
    if wanted & {"stat_lo", "stat_hi"}:
        lo, hi, defined = statistical_regret(log, cfg.conf, cfg.stat_method, cfg.bootstrap_b,
                                             stream.generator(METRIC_STREAM), env.n_arms)
        series["stat_lo"], series["stat_hi"] = lo, hi
    series = {m: series[m] for m in cfg.metrics}
    rec = policy.recommend() if hasattr(policy, "recommend") else None
    return Replication(r, series, rec, defined)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    replications: list[Replication]
    wall_time: float = 0.0
    bounds: list[dict] = field(default_factory=list)

    def matrix(self, metric: str) -> np.ndarray:
        """Per-replication series stacked as an (R, H) array."""
        return np.vstack([rep.series[metric] for rep in self.replications])

    def mean(self, metric: str) -> np.ndarray:
        return self.matrix(metric).mean(axis=0)

    def sd(self, metric: str) -> np.ndarray:
        m = self.matrix(metric)
        if m.shape[0] < 2:
            return np.zeros(m.shape[1])
        return m.std(axis=0, ddof=1)

    def final(self, metric: str) -> np.ndarray:
        return self.matrix(metric)[:, -1]


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run every replication and check the configured bounds.

    Replications are independent, and results are ordered by replication
    index whatever the worker count, so serial and parallel runs agree.
    """
    start = time.perf_counter()
    indices = range(cfg.replications)
    if workers > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reps = list(pool.map(run_replication, [cfg] * cfg.replications, indices,
                                 chunksize=max(1, cfg.replications // (4 * workers))))
    else:
        reps = [run_replication(cfg, r) for r in indices]
    reps.sort(key=lambda rep: rep.index)
    result = ExperimentResult(cfg, reps)
    result.bounds = check_bounds(result)
    result.wall_time = time.perf_counter() - start
    return result


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


class _NotApplicable:
    def __repr__(self):
        return "NOT_APPLICABLE"

    def __bool__(self):
        return False


NOT_APPLICABLE = _NotApplicable()


@dataclass(frozen=True)
class BoundSpec:
    """``family`` is one of ucb1-log, ucb2-log, moss-minimax, generic-logarithmic, generic-sqrt.

    ``alpha`` feeds the UCB2 bound; ``constant`` scales the generic families.
    """

    family: str
    alpha: float = 0.1
    constant: float = 1.0


def ucb2_c_alpha(alpha: float) -> float:
    a = alpha
    return 1.0 + (1.0 + a) * math.e / a**2 + ((1.0 + a) / a) ** (1.0 + a) * (
        1.0 + 11.0 * (1.0 + a) / (5.0 * a**2 * math.log(1.0 + a)))


def _gaps(env) -> Optional[np.ndarray]:
    if (getattr(env, "n_arms", None) is None or getattr(env, "adversarial", False)
            or getattr(env, "contextual", False) or not getattr(env, "stationary", False)):
        return None
    mu = env.means(1)
    return mu.max() - mu


def evaluate_bound(bound: BoundSpec, env, t: int):
    """Value of a regret bound at step ``t``, or NOT_APPLICABLE.

    Only stationary finite-armed environments have the gaps these bounds
    need.  The UCB2 bound also needs t >= max 1/(2 gap^2).
    """
    if t < 1:
        raise DomainError("t must be >= 1")
    gaps = _gaps(env)
    if gaps is None:
        return NOT_APPLICABLE
    pos = gaps[gaps > 0]
    fam = bound.family
    if fam == "ucb1-log":
        return float(8.0 * np.sum(math.log(t) / pos) + (1.0 + math.pi**2 / 3.0) * gaps.sum())
    if fam == "ucb2-log":
        a = bound.alpha
        if not 0.0 < a < 1.0:
            raise DomainError("UCB2 bound needs 0 < alpha < 1")
        if pos.size and t < np.max(1.0 / (2.0 * pos**2)):
            return NOT_APPLICABLE
        c = ucb2_c_alpha(a)
        return float(np.sum((1 + a) * (1 + 4 * a) * np.log(2 * math.e * pos**2 * t) / (2 * pos) + c / pos))
    if fam == "moss-minimax":
        if not pos.size:
            return 0.0
        k, d = gaps.size, pos.min()
        return float(min(25.0 * math.sqrt(t * k), 23.0 * k / d * math.log(max(140.0 * t * d * d / k, 1e4))))
    if fam == "generic-logarithmic":
        return float(bound.constant * np.sum(math.log(t) / pos))
    if fam == "generic-sqrt":
        return float(bound.constant * math.sqrt(gaps.size * t))
    raise DomainError(f"unknown bound family {fam!r}")


def bound_verdict(value, observed: float) -> str:
    if value is NOT_APPLICABLE:
        return "not-applicable"
    return "below-bound" if observed < value else "above-bound"


def check_bounds(result: ExperimentResult) -> list[dict]:
    cfg = result.config
    if not cfg.bounds:
        return []
    env = build_environment(cfg, RngStream(cfg.seed, 0).generator(BUILD_STREAM))
    observed = float(result.mean("ee")[-1]) if "ee" in cfg.metrics else math.nan
    rows = []
    for b in cfg.bounds:
        spec = BoundSpec(b["family"], float(b.get("alpha", 0.1)), float(b.get("constant", 1.0)))
        value = evaluate_bound(spec, env, cfg.horizon)
        verdict = "not-applicable" if math.isnan(observed) else bound_verdict(value, observed)
        rows.append({"family": spec.family, "t": cfg.horizon,
                     "bound": None if value is NOT_APPLICABLE else value,
                     "mean_ee": None if math.isnan(observed) else observed, "verdict": verdict})
    return rows


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

CSV_NAME, JSON_NAME, SVG_NAME = "series.csv", "summary.json", "regret.svg"


def _writable(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    return path


def write_csv(result: ExperimentResult, path: Path) -> Path:
    metrics = result.config.metrics
    cols = {m: (result.mean(m), result.sd(m)) for m in metrics}
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step"] + [f"{m}_{s}" for m in metrics for s in ("mean", "sd")])
            for i in range(result.config.horizon):
                w.writerow([i + 1] + [repr(float(c[i])) for m in metrics for c in cols[m]])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def summary(result: ExperimentResult) -> dict:
    cfg = result.config
    finals = {}
    for m in cfg.metrics:
        f = result.final(m)
        finals[m] = {"mean": float(f.mean()), "sd": float(f.std(ddof=1)) if f.size > 1 else 0.0}
    out = {"config": cfg.to_dict(), "final": finals, "bounds": result.bounds,
           "wall_time_s": result.wall_time}
    recs = [rep.recommendation for rep in result.replications if rep.recommendation is not None]
    if recs:
        out["recommendations"] = recs
    if {"stat_lo", "stat_hi"} & set(cfg.metrics):
        out["stat_defined"] = [rep.stat_defined for rep in result.replications]
    return out


def write_json(result: ExperimentResult, path: Path) -> Path:
    try:
        with open(path, "w") as fh:
            json.dump(summary(result), fh, indent=2, allow_nan=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path: str | Path) -> tuple[np.ndarray, dict[str, tuple[np.ndarray, np.ndarray]]]:
    """Step column and ``{metric: (mean, sd)}`` from a results CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    metrics = [h[:-5] for h in header[1::2]]
    return body[:, 0], {m: (body[:, 1 + 2 * i], body[:, 2 + 2 * i]) for i, m in enumerate(metrics)}


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_svg(steps: np.ndarray, series: dict[str, tuple[np.ndarray, np.ndarray]], width: int = 720,
               height: int = 420, max_points: int = 1000) -> str:
    """Line chart: one polyline per metric over a translucent +-1 sd band."""
    pad = 50
    idx = np.unique(np.linspace(0, len(steps) - 1, min(len(steps), max_points)).astype(int))
    xs = steps[idx]
    lows = [np.nan_to_num(m[idx] - s[idx]) for m, s in series.values()]
    highs = [np.nan_to_num(m[idx] + s[idx]) for m, s in series.values()]
    y0, y1 = min(float(v.min()) for v in lows), max(float(v.max()) for v in highs)
    if y1 <= y0:
        y1 = y0 + 1.0
    x0, x1 = float(xs[0]), float(max(xs[-1], xs[0] + 1))

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    def pts(x, y):
        return " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             '<rect width="100%" height="100%" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">step</text>',
             f'<text x="{pad}" y="{pad - 8}" font-size="11">{y1:.4g}</text>',
             f'<text x="{pad}" y="{height - pad + 14}" font-size="11">{y0:.4g}</text>']
    for k, (name, lo, hi) in enumerate(zip(series, lows, highs)):
        colour = PALETTE[k % len(PALETTE)]
        band = pts(xs, hi) + " " + pts(xs[::-1], lo[::-1])
        parts.append(f'<polygon class="band" points="{band}" fill="{colour}" fill-opacity="0.15" stroke="none"/>')
        mean = np.nan_to_num(series[name][0][idx])
        parts.append(f'<polyline class="metric" data-metric="{name}" points="{pts(xs, mean)}" fill="none" '
                     f'stroke="{colour}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - pad - 110}" y="{pad + 16 * k}" font-size="12" fill="{colour}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(csv_path: str | Path, svg_path: str | Path, metrics: Optional[Sequence[str]] = None) -> Path:
    steps, series = read_csv(csv_path)
    if metrics is not None:
        series = {m: series[m] for m in metrics}
    svg_path = Path(svg_path)
    try:
        svg_path.write_text(render_svg(steps, series))
    except OSError as exc:
        raise OSError(f"cannot write {svg_path}: {exc}") from exc
    return svg_path


def emit_outputs(result: ExperimentResult, out_dir: str | Path, formats: Sequence[str] = ("csv", "json", "svg"),
                 ) -> dict[str, Path]:
    out = _writable(Path(out_dir))
    paths: dict[str, Path] = {}
    if "csv" in formats or "svg" in formats:
        paths["csv"] = write_csv(result, out / CSV_NAME)
    if "json" in formats:
        paths["json"] = write_json(result, out / JSON_NAME)
    if "svg" in formats:
        paths["svg"] = write_svg(paths["csv"], out / SVG_NAME)
    return paths


def bound_table(summary_data: dict) -> str:
    rows = summary_data.get("bounds", [])
    if not rows:
        return "no bounds configured"
    lines = [f"{'family':<22}{'t':>8}{'bound':>14}{'mean ee':>14}  verdict"]
    for r in rows:
        b = "n/a" if r["bound"] is None else f"{r['bound']:.4f}"
        o = "n/a" if r["mean_ee"] is None else f"{r['mean_ee']:.4f}"
        lines.append(f"{r['family']:<22}{r['t']:>8}{b:>14}{o:>14}  {r['verdict']}")
    return "\n".join(lines)
