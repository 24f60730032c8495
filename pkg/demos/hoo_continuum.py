"""HOO zooming in on the peak of a triangle over [0, 1].

The tree refines only near points that still look promising, so the played
points concentrate around the peak.

    python demos/hoo_continuum.py
"""
import numpy as np

from banditlab.core import RngStream
from banditlab.environments import ContinuumEnv, MEAN_FUNCTIONS
from banditlab.harness import simulate
from banditlab.policies.extended import HOO

env = ContinuumEnv(MEAN_FUNCTIONS["triangle"](peak=0.7), "bernoulli")
policy = HOO(rng=RngStream(0).generator(1))
log = simulate(policy, env, 5000, RngStream(0).generator(0))

xs = np.array(log.arms)
for lo in np.arange(0.0, 1.0, 0.1):
    share = np.mean((xs >= lo) & (xs < lo + 0.1))
    print(f"[{lo:.1f}, {lo + 0.1:.1f})  {'#' * int(share * 100):<60} {share:.3f}")
print(f"recommended point {policy.recommend():.4f}, tree splits {policy.tree.splits}")
