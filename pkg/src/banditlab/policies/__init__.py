"""Bandit policies grouped by family."""
from .adversarial import SAO, Exp3, Exp4, Exp4P
from .contextual import DecayedLinTS, LinTS, LinUCB
from .extended import HOO, IMPTS, MPTS
from .nonstationary import AdaptEvE, DiscountedUCB, Exp3R, KalmanBandit, SlidingWindowUCB
from .sampling import BESA, Poker, ThompsonSampling
from .semiuniform import EpochWrapper, EpsilonFirstPolicy, EpsilonGreedy
from .ucb import KLUCB, MOSS, UCB1, UCB2, BayesUCB, UCBTuned

__all__ = [
    "SAO", "Exp3", "Exp4", "Exp4P", "DecayedLinTS", "LinTS", "LinUCB", "HOO", "IMPTS", "MPTS", "AdaptEvE",
    "DiscountedUCB", "Exp3R", "KalmanBandit", "SlidingWindowUCB", "BESA", "Poker", "ThompsonSampling",
    "EpochWrapper", "EpsilonFirstPolicy", "EpsilonGreedy", "KLUCB", "MOSS", "UCB1", "UCB2", "BayesUCB", "UCBTuned",
]
