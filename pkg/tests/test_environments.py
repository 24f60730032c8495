import numpy as np
import pytest
from hypothesis import given, strategies as st

from banditlab.core import DomainError, RngStream
from banditlab.environments import (AdversarialMatrixEnv, Bernoulli, ContextualLinearEnv, ContinuumEnv, DriftingEnv,
                                    Gaussian, StochasticEnv, SwitchingEnv, double_bump, triangle)
from banditlab.harness import simulate
from banditlab.policies import Exp3, UCB1


def rng(seed=0):
    return RngStream(seed).generator()


def test_degenerate_bernoulli():
    env = StochasticEnv.bernoulli([1.0])
    g = rng()
    assert all(env.sample_reward(0, t, g) == 1.0 for t in range(1, 200))


def test_matrix_lookup():
    m = np.zeros((5, 2))
    m[2, 1] = 0.25
    assert AdversarialMatrixEnv(m).sample_reward(1, 3, rng()) == 0.25


def test_bernoulli_frequency():
    # Oracle: the sample mean of 1e5 Bernoulli(0.6) draws has sd ~0.0015.
    env = StochasticEnv.bernoulli([0.6])
    draws = env.reward_table(1, 100_000, rng(11))[:, 0]
    assert abs(draws.mean() - 0.6) <= 0.005


def test_matrix_horizon_error():
    env = AdversarialMatrixEnv(np.zeros((3, 2)))
    with pytest.raises(DomainError):
        env.sample_reward(0, 4, rng())


def test_oracle_best_stationary():
    assert StochasticEnv.bernoulli([0.9, 0.6]).oracle_best(17) == (0, 0.9)


def test_oracle_best_switching():
    env = SwitchingEnv.bernoulli([(1, [0.9, 0.6]), (500, [0.2, 0.8])])
    assert env.oracle_best(499) == (0, 0.9)
    assert env.oracle_best(500) == (1, 0.8)


def test_oracle_best_triangle():
    assert ContinuumEnv(triangle(0.7, 0.9)).oracle_best() == (0.7, 0.9)


def test_oracle_best_numeric_matches_grid():
    env = ContinuumEnv(double_bump)
    x, v = env.oracle_best()
    grid = np.linspace(0, 1, 200_001)
    assert v >= double_bump(grid).max() - 1e-12
    assert abs(x - 0.8) < 1e-3


def test_multi_play_oracle():
    env = StochasticEnv.bernoulli([0.2, 0.9, 0.5, 0.7])
    arms, value = env.oracle_best(1, m=2)
    assert arms == (1, 3) and value == pytest.approx(1.6)


def test_gaps():
    env = StochasticEnv.bernoulli([0.9, 0.6])
    assert env.gap(1, 1) == pytest.approx(0.3)
    assert env.gap(0, 1) == 0.0
    eq = StochasticEnv.bernoulli([0.5, 0.5, 0.5])
    assert [eq.gap(i, 3) for i in range(3)] == [0.0, 0.0, 0.0]


def test_drift_gap():
    env = DriftingEnv([Bernoulli(0.9), Bernoulli(0.6)], [0.0, 0.0001])
    # Direct evaluation: 0.9 - (0.6 + 0.0001 * 1000).
    assert env.gap(1, 1000) == pytest.approx(0.9 - (0.6 + 0.0001 * 1000), abs=1e-12)


def test_drift_clamps():
    env = DriftingEnv([Bernoulli(0.9)], [0.01])
    assert env.means(1000)[0] == 1.0


@pytest.mark.parametrize("make", [
    lambda: SwitchingEnv.bernoulli([(2, [0.5])]),
    lambda: SwitchingEnv.bernoulli([(1, [0.5]), (1, [0.4])]),
    lambda: Bernoulli(1.5),
    lambda: Gaussian(0.0, -1.0),
    lambda: AdversarialMatrixEnv([[1.2, 0.0]]),
    lambda: ContextualLinearEnv([[1.0]], noise_sigma=-1),
    lambda: ContinuumEnv(lambda x: 2.0 * np.ones_like(x)),
])
def test_invalid_specs(make):
    with pytest.raises(DomainError):
        make()


def test_truncated_gaussian_mean():
    g = Gaussian(0.9, 0.3, (0.0, 1.0))
    draws = StochasticEnv([g]).reward_table(1, 200_000, rng(5))[:, 0]
    assert abs(draws.mean() - g.mean) < 0.003


def test_contextual_means():
    env = ContextualLinearEnv([[1.0, 0.0], [0.0, 1.0]], noise_sigma=0.0)
    c = env.context(1, rng())
    assert np.linalg.norm(c) == pytest.approx(1.0)
    assert np.allclose(env.reward_table(1, 1, rng(), [c])[0], [c[0], c[1]])


@pytest.mark.invariant
@given(st.lists(st.floats(0, 1), min_size=1, max_size=6), st.integers(1, 10**6), st.integers(1, 10**6))
def test_stationary_oracle_constant(ps, t1, t2):
    env = StochasticEnv.bernoulli(ps)
    assert env.oracle_best(t1) == env.oracle_best(t2)


@pytest.mark.invariant
@given(st.floats(-2, 2), st.floats(0, 3), st.integers(0, 2**32))
def test_bounded_rewards_in_bounds(mu, sigma, seed):
    env = StochasticEnv([Gaussian(mu, sigma, (-0.5, 0.5)), Bernoulli(0.3)])
    r = env.reward_table(1, 200, rng(seed))
    assert (r[:, 0] >= -0.5).all() and (r[:, 0] <= 0.5).all()
    assert set(np.unique(r[:, 1])) <= {0.0, 1.0}


@pytest.mark.invariant
@given(st.integers(0, 2**32), st.integers(0, 2**32))
def test_matrix_playback_ignores_rng(s1, s2):
    env = AdversarialMatrixEnv.fixed_best(80, 3, rng(1))
    a = simulate(Exp3(3, rng=rng(9)), env, 80, rng(s1))
    b = simulate(Exp3(3, rng=rng(9)), env, 80, rng(s2))
    assert a == b


def test_common_random_numbers():
    env = StochasticEnv.bernoulli([0.9, 0.6])
    a = env.reward_table(1, 100, rng(3))
    b = env.reward_table(1, 100, rng(3))
    assert np.array_equal(a, b)
    log = simulate(UCB1(2, rng=rng(1)), env, 100, rng(3))
    assert np.array_equal(log.reward_matrix()[:, 0], a[np.arange(100), log.arm_matrix()[:, 0]])
