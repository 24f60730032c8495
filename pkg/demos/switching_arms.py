"""What happens when the best arm changes halfway through.

UCB1 trusts its whole history and takes a long time to notice the switch.
Discounting and sliding windows forget old rewards and recover quickly.

    python demos/switching_arms.py
"""
from banditlab.config import ExperimentConfig
from banditlab.harness import run_experiment

H, R = 10_000, 10
ENV = {"kind": "switching", "segments": [{"start": 1, "means": [0.9, 0.1]}, {"start": H // 2 + 1, "means": [0.1, 0.9]}]}

for name, params in (("ucb1", {}), ("d-ucb", {"gamma": 0.995}), ("sw-ucb", {"tau": 1000}),
                     ("adapt-eve", {}), ("kalman", {})):
    cfg = ExperimentConfig.from_dict({"experiment": {"horizon": H, "replications": R, "seed": 3,
                                                     "metrics": ["ee", "suboptimal"]},
                                      "policy": {"name": name, "params": params}, "environment": ENV})
    res = run_experiment(cfg)
    ee, sub = res.mean("ee"), res.mean("suboptimal")
    print(f"{name:<10} regret before switch {ee[H // 2 - 1]:7.1f}  at H {ee[-1]:7.1f}  "
          f"suboptimal plays after switch {sub[-1] - sub[H // 2 - 1]:7.1f}")
