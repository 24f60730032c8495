"""Multi-armed bandit policies, environments, regret measures and a replicated simulation harness."""
from .core import (ArmStats, DomainError, Policy, PolicyDecision, PullLog, RngStream, argmax_tiebreak,
                   top_m_tiebreak, update_stats)
from .environments import (AdversarialMatrixEnv, ContextualLinearEnv, ContinuumEnv, DriftingEnv, StochasticEnv,
                           SwitchingEnv)
from .regret import (RegretSeries, expected_expected_regret, expected_payoff_regret, statistical_regret,
                     suboptimal_plays, weak_regret)

__version__ = "0.1.0"
