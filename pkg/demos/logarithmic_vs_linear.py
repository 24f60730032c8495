"""UCB1 against constant epsilon-greedy on two Bernoulli arms.

UCB1 regret grows like log t; constant exploration keeps paying a fixed
price per step, so its regret grows linearly.

    python demos/logarithmic_vs_linear.py
"""
import math

from banditlab.config import ExperimentConfig
from banditlab.environments import StochasticEnv
from banditlab.harness import BoundSpec, evaluate_bound, run_experiment

H, R = 10_000, 20
ENV = {"kind": "bernoulli", "means": [0.9, 0.6]}


def mean_regret(name, params=None):
    cfg = ExperimentConfig.from_dict({"experiment": {"horizon": H, "replications": R, "seed": 1, "metrics": ["ee"]},
                                      "policy": {"name": name, "params": params or {}}, "environment": ENV})
    return run_experiment(cfg).mean("ee")


ucb = mean_regret("ucb1")
eps = mean_regret("epsilon-greedy", {"epsilon": 0.1})
bound = evaluate_bound(BoundSpec("ucb1-log"), StochasticEnv.bernoulli(ENV["means"]), H)

print(f"{'t':>6}{'UCB1':>10}{'eps=0.1':>10}{'log bound':>12}")
for t in (100, 1000, 3000, 10_000):
    b = evaluate_bound(BoundSpec("ucb1-log"), StochasticEnv.bernoulli(ENV["means"]), t)
    print(f"{t:>6}{ucb[t - 1]:>10.1f}{eps[t - 1]:>10.1f}{b:>12.1f}")
print(f"growth 1e3 -> 1e4: UCB1 x{ucb[-1] / ucb[999]:.2f}, eps x{eps[-1] / eps[999]:.2f} "
      f"(log ratio {math.log(H) / math.log(1000):.2f}, linear ratio 10)")
