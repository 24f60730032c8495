import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from banditlab.core import DomainError, RngStream
from banditlab.policies.sampling import (BESA, Poker, PosteriorBank, ThompsonSampling, besa_duel, besa_tournament,
                                        poker_delta, poker_score, thompson_select, thompson_select_optimistic)
from oracles import besa_duel_prob, besa_tournament_probs, prob_beta_greater


def gen(seed=0):
    return RngStream(seed).generator()


def freq(fn, n, arm=0):
    return np.mean([fn().arm == arm for _ in range(n)])


def test_ts_dominant_posterior():
    bank, g = PosteriorBank.beta([(1e6, 1), (1, 1e6)]), gen(1)
    assert freq(lambda: thompson_select(bank, g), 10_000) > 0.999


def test_ts_symmetric():
    bank, g = PosteriorBank.beta([(3, 4), (3, 4)]), gen(2)
    assert abs(freq(lambda: thompson_select(bank, g), 10_000) - 0.5) <= 0.02


def test_ts_order_statistic():
    bank, g = PosteriorBank.beta([(2, 1), (1, 1)]), gen(3)
    assert abs(freq(lambda: thompson_select(bank, g), 10_000) - prob_beta_greater(2, 1, 1, 1)) <= 0.02


@pytest.mark.invariant
@pytest.mark.parametrize("params", [((2, 1), (1, 1)), ((5, 3), (4, 4)), ((12, 30), (2, 5)), ((1, 1), (1.5, 1))])
def test_ts_matches_optimality_integral(params):
    bank, g = PosteriorBank.beta(params), gen(4)
    draws = bank.a[None, :], bank.b[None, :]
    # Vectorised draws of the same posteriors: the selection is argmax of one draw per arm.
    x = g.beta(np.repeat(draws[0], 100_000, 0), np.repeat(draws[1], 100_000, 0))
    est = float(np.mean(x[:, 0] > x[:, 1]))
    assert abs(est - prob_beta_greater(*params[0], *params[1])) <= 0.01
    g2 = gen(5)
    picks = np.array([thompson_select(bank, g2).arm for _ in range(20_000)])
    assert abs((picks == 0).mean() - prob_beta_greater(*params[0], *params[1])) <= 0.015


def test_optimistic_degenerate_matches_plain():
    bank = PosteriorBank.beta([(1e12, 1e12), (1e12, 3e12)])
    a, b = gen(6), gen(6)
    for _ in range(50):
        assert thompson_select(bank, a).arm == thompson_select_optimistic(bank, b).arm


def test_optimistic_draw_mean():
    bank, g = PosteriorBank.beta([(1, 1)]), gen(7)
    draws = [thompson_select_optimistic(bank, g).scores[0] for _ in range(20_000)]
    # E[max(U, 1/2)] = 1/8 + 1/2 = 0.625.
    assert abs(np.mean(draws) - 0.625) <= 0.01


def test_optimistic_single_arm():
    bank = PosteriorBank.beta([(2, 3)])
    assert thompson_select_optimistic(bank, gen()).arm == 0


def test_bank_validation():
    with pytest.raises(DomainError):
        PosteriorBank(2, "poisson")
    bank = PosteriorBank(2)
    with pytest.raises(DomainError):
        bank.update(0, 1.5)


def test_gaussian_bank_posterior():
    bank = PosteriorBank(2, "gaussian", prior_mean=0.0, prior_var=1.0)
    bank.update(0, 1.0)
    mean, var = bank.normal_params()
    # One observation, no residual df yet: noise variance 1, so mean 1/2 and variance 1/2.
    assert np.allclose(mean, [0.5, 0.0]) and np.allclose(var, [0.5, 1.0])


def test_poker_delta():
    assert poker_delta([0.3], 1) == 0.0
    assert poker_delta([0.9, 0.7, 0.5, 0.1], 4) == pytest.approx((0.9 - 0.7) / 2)
    assert poker_delta([0.8, 0.6, 0.5, 0.4, 0.4, 0.3, 0.2, 0.1, 0.0], 9) == pytest.approx(0.1)


def test_poker_score_examples():
    assert poker_score(0.41, 0.2, 0.6, 0.1, 50, 50) == 0.41
    assert poker_score(0.7, 0.1, 0.6, 0.1, 30, 10) == pytest.approx(0.7 + 0.5 * 0.1 * 20)
    expected = 0.5 + 0.1 * 10 * norm.cdf(-1.0)
    assert poker_score(0.5, 0.1, 0.5, 0.1, 20, 10) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.65866, abs=1e-5)


@pytest.mark.invariant
@given(st.lists(st.floats(0, 1), min_size=2, max_size=6), st.integers(0, 2**32))
def test_poker_exploits_at_horizon(rewards, seed):
    k = len(rewards)
    p = Poker(k, horizon=3 * k, rng=gen(seed))
    for t in range(1, 2 * k + 1):
        p.update(t, [(t - 1) % k], [rewards[(t - 1) % k]])
    assert np.array_equal(p.indices(3 * k), p.means)


def test_poker_single_play_uses_pooled_sd():
    p = Poker(3, horizon=100)
    for t, (a, r) in enumerate([(0, 1.0), (0, 0.0), (1, 0.5), (2, 0.2)], start=1):
        p.update(t, [a], [r])
    s = p.indices(5)
    assert np.isfinite(s).all()


def test_besa_equal_lengths():
    assert besa_duel([1, 1, 0, 1, 1], [0, 0, 1, 0, 0], gen(), 0, 1) == 0


def test_besa_forced_tie():
    assert {besa_duel([1, 1, 1, 1], [1], gen(s), 0, 1) for s in range(20)} == {1}


def test_besa_subsample_frequency():
    g = gen(8)
    hi = (g.random(100) < 0.9).astype(float).tolist()
    hj = (g.random(10) < 0.5).astype(float).tolist()
    wins = np.mean([besa_duel(hi, hj, g, 0, 1) == 0 for _ in range(10_000)])
    assert abs(wins - besa_duel_prob(hi, hj)) <= 0.02


def test_besa_tournament_small():
    assert besa_tournament([[0.3]], gen()) == 0
    assert besa_tournament([[1.0], [0.0]], gen()) == 0


def test_besa_tournament_bye_distribution():
    hists = [[1, 1, 0, 1], [1, 0], [0, 1, 1]]
    g = gen(9)
    wins = np.bincount([besa_tournament(hists, g) for _ in range(10_000)], minlength=3) / 1e4
    assert np.allclose(wins, besa_tournament_probs(hists), atol=0.02)


@pytest.mark.invariant
@given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.integers(0, 2**32))
def test_besa_equal_lengths_no_subsampling(h, seed):
    other = [1.0 - x for x in h]
    g, ref = gen(seed), gen(seed)
    winner = besa_duel(h, other, g, 0, 1)
    mi, mj = np.mean(h), np.mean(other)
    if mi != mj:
        assert winner == (0 if mi > mj else 1)
        assert g.random() == ref.random()


def test_besa_plays_unplayed_first():
    p = BESA(3, rng=gen())
    seen = []
    for t in range(1, 4):
        a = p.select(t).arm
        seen.append(a)
        p.update(t, [a], [0.5])
    assert sorted(seen) == [0, 1, 2]
    assert [len(h) for h in p.histories] == [1, 1, 1]


def test_thompson_policy_updates():
    p = ThompsonSampling(2, rng=gen())
    p.update(1, [0], [1.0])
    assert p.bank.a[0] == 2.0 and p.bank.b[0] == 1.0
