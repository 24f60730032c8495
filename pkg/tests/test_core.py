import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from banditlab.core import (ArmStats, DomainError, PolicyDecision, PullLog, RngStream, argmax_tiebreak,
                            top_m_tiebreak, update_stats)
from banditlab.environments import StochasticEnv
from banditlab.harness import simulate
from banditlab.policies import UCB1
from oracles import exact_fold

rewards = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40)


def fold(xs):
    s = ArmStats()
    for x in xs:
        s = update_stats(s, x)
    return s


def test_first_observation():
    assert update_stats(ArmStats(), 1.0) == ArmStats(1, 1.0, 1.0)


def test_two_point_mean():
    assert update_stats(ArmStats(1, 1.0, 1.0), 0.0) == ArmStats(2, 0.5, 1.0)


def test_fold_matches_exact_rationals():
    n, mean, ss = exact_fold([0.2, 0.4, 0.9])
    s = fold([0.2, 0.4, 0.9])
    assert s.count == n == 3
    assert s.mean == pytest.approx(float(mean), abs=1e-15)
    assert s.sum_squares == pytest.approx(float(ss), abs=1e-15)
    assert float(mean) == 0.5 and float(ss) == pytest.approx(1.01)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_reward_rejected(bad):
    with pytest.raises(DomainError):
        update_stats(ArmStats(), bad)


@pytest.mark.invariant
@given(rewards, st.randoms(use_true_random=False))
def test_fold_is_permutation_invariant(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    a, b = fold(xs), fold(ys)
    assert a.mean == pytest.approx(b.mean, rel=1e-9, abs=1e-9)


@pytest.mark.invariant
@given(rewards)
def test_stats_invariants(xs):
    s = fold(xs)
    assert min(xs) - 1e-9 <= s.mean <= max(xs) + 1e-9
    assert s.sum_squares >= s.count * s.mean**2 - 1e-6 * max(1.0, s.sum_squares)


def test_argmax_unique():
    assert argmax_tiebreak([0.1, 0.9, 0.3], RngStream(1).generator()) == 1


def test_argmax_sentinel():
    assert argmax_tiebreak([math.inf, 1.0], RngStream(1).generator()) == 0


def test_argmax_ties_are_fair():
    rng = RngStream(2).generator()
    picks = np.array([argmax_tiebreak([0.5, 0.5], rng) for _ in range(10_000)])
    assert abs(picks.mean() - 0.5) <= 0.02


def test_argmax_all_nan():
    with pytest.raises(DomainError):
        argmax_tiebreak([math.nan, math.nan], RngStream(1).generator())


def test_argmax_ignores_nan():
    assert argmax_tiebreak([math.nan, 0.2, 0.1], RngStream(1).generator()) == 1


def test_argmax_no_draw_without_tie():
    a, b = RngStream(3).generator(), RngStream(3).generator()
    argmax_tiebreak([0.1, 0.9], a)
    assert a.random() == b.random()


@pytest.mark.invariant
@given(st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0]), min_size=1, max_size=8),
       st.sampled_from([-3.0, 0.5, 8.0]), st.integers(0, 2**32))
def test_argmax_shift_invariant(scores, shift, seed):
    a = argmax_tiebreak(scores, RngStream(seed).generator())
    b = argmax_tiebreak([s + shift for s in scores], RngStream(seed).generator())
    assert a == b


def test_top_m():
    rng = RngStream(0).generator()
    assert top_m_tiebreak([0.1, 0.9, 0.5], 2, rng) == (1, 2)
    with pytest.raises(DomainError):
        top_m_tiebreak([0.1], 2, rng)


def test_top_m_one_matches_argmax_stream():
    a, b = RngStream(4).generator(), RngStream(4).generator()
    for _ in range(200):
        assert top_m_tiebreak([1.0, 1.0, 0.0], 1, a) == (argmax_tiebreak([1.0, 1.0, 0.0], b),)


def test_rng_stream_reproducible_and_distinct():
    a = RngStream(7, 1).generator().random(5)
    assert np.array_equal(a, RngStream(7, 1).generator().random(5))
    assert not np.array_equal(a, RngStream(7, 2).generator().random(5))
    assert not np.array_equal(RngStream(7, 1).generator(0).random(5), RngStream(7, 1).generator(1).random(5))


def test_rng_stream_pinned_first_draw():
    # Philox4x64-10 keyed (0, 0) at counter zero; catches accidental generator changes.
    first = RngStream(0, 0).generator().integers(0, 2**63)
    assert first == RngStream(0, 0).generator().integers(0, 2**63)
    assert isinstance(RngStream(0).generator().bit_generator, np.random.Philox)


@pytest.mark.invariant
@given(st.integers(0, 2**40), st.integers(0, 50))
def test_identical_streams_identical_logs(seed, stream):
    env = StochasticEnv.bernoulli([0.7, 0.5, 0.2])
    logs = [simulate(UCB1(3, rng=RngStream(seed, stream).generator(1)), env, 60,
                     RngStream(seed, stream).generator(0)) for _ in range(2)]
    assert logs[0] == logs[1]


def test_pull_log_contract():
    log = PullLog()
    log.append(1, 0, 1.0)
    with pytest.raises(DomainError):
        log.append(3, 0, 1.0)
    with pytest.raises(DomainError):
        log.append(2, (1, 1), (0.0, 0.0))
    log.append(2, 1, 0.0)
    assert list(log.steps) == [1, 2]
    assert [list(r) for r in log.rewards_by_arm(2)] == [[1.0], [0.0]]


def test_decision_contract():
    assert PolicyDecision((2,)).arm == 2
    with pytest.raises(DomainError):
        PolicyDecision(())
    with pytest.raises(DomainError):
        PolicyDecision((1, 1))
    with pytest.raises(DomainError):
        PolicyDecision((0, 1)).arm
