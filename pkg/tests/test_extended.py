import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banditlab.core import DomainError, RngStream
from banditlab.environments import ContinuumEnv, StochasticEnv, triangle
from banditlab.harness import simulate
from banditlab.policies.extended import (HOO, IMPTS, MPTS, HooTree, hoo_observe, hoo_step, hoo_uvalue, imp_ts_select,
                                         mp_ts_select)
from banditlab.policies.sampling import PosteriorBank, thompson_select
from oracles import prob_beta_greater


def gen(seed=0, sub=0):
    return RngStream(seed).generator(sub)


def test_uvalue_examples():
    assert hoo_uvalue(0.3, 1, 1, 0) == pytest.approx(0.3 + 1.0)
    assert hoo_uvalue(0.5, 2, math.exp(2), 2) == pytest.approx(0.5 + math.sqrt(2) + 0.25, abs=1e-12)
    assert hoo_uvalue(0.5, 0, 10, 3) == math.inf


def test_uvalue_parameters():
    with pytest.raises(DomainError):
        hoo_uvalue(0.0, 1, 1, 0, rho=1.0)
    with pytest.raises(DomainError):
        HooTree(rho=0.5, v1=0.0)


def test_first_step():
    tree = HooTree()
    x, tree = hoo_step(tree, gen())
    assert 0.0 <= x < 1.0
    assert tree.root.children is not None and tree.splits == 1


def test_descent_prefers_rewarded_child():
    tree, g = HooTree(), gen(1)
    x, _ = hoo_step(tree, g)
    hoo_observe(tree, 0.5)
    for _ in range(2):
        x, _ = hoo_step(tree, g)
        hoo_observe(tree, 1.0 if x < 0.5 else 0.0)
    left, right = tree.root.children
    assert left.count == right.count == 1
    assert tree.descend(g)[1] is left


def test_observe_requires_step():
    with pytest.raises(DomainError):
        hoo_observe(HooTree(), 1.0)


@pytest.mark.slow
def test_hoo_localizes_triangle_peak():
    env = ContinuumEnv(triangle(0.7, 0.9))
    close = 0
    for s in range(50):
        p = HOO(rng=gen(s, 1))
        simulate(p, env, 5000, gen(s))
        close += abs(p.recommend() - 0.7) <= 0.05
    assert close / 50 >= 0.9


def test_max_depth_guard():
    tree, g = HooTree(max_depth=2), gen(2)
    for _ in range(50):
        hoo_step(tree, g)
        hoo_observe(tree, 0.5)
    assert max(n.depth for n in tree.nodes()) == 2


@pytest.mark.invariant
@settings(max_examples=30)
@given(st.integers(0, 2**32), st.integers(1, 150), st.floats(0.1, 0.9), st.floats(0.1, 2.0))
def test_hoo_tree_invariants(seed, steps, rho, v1):
    tree, g = HooTree(rho, v1), gen(seed)
    f = triangle(0.3, 0.8)
    for t in range(1, steps + 1):
        x, _ = hoo_step(tree, g)
        hoo_observe(tree, float(g.random() < f(x)))
        assert tree.splits == t
        assert sum(1 for _ in tree.nodes()) == 1 + 2 * t
        for node in tree.nodes():
            if node.children is None:
                continue
            left, right = node.children
            assert left.lo == node.lo and left.hi == right.lo and right.hi == node.hi
            assert node.count == left.count + right.count + 1
            if node.count:
                u = hoo_uvalue(node.mean, node.count, tree.total, node.depth, rho, v1)
                assert node.b <= u + 1e-12
                assert node.b <= max(left.b, right.b)
            else:
                assert node.b == math.inf


def test_mp_ts_all_arms():
    bank = PosteriorBank(4)
    assert sorted(mp_ts_select(bank, 4, gen()).arms) == [0, 1, 2, 3]


def test_mp_ts_frequency():
    bank, g = PosteriorBank.beta([(1000, 1), (500, 500), (1, 1000)]), gen(3)
    hits = np.mean([set(mp_ts_select(bank, 2, g).arms) == {0, 1} for _ in range(10_000)])
    assert hits > 0.99


def test_mp_ts_bad_m():
    with pytest.raises(DomainError):
        mp_ts_select(PosteriorBank(2), 3, gen())
    with pytest.raises(DomainError):
        MPTS(2, m=0)


@pytest.mark.invariant
@given(st.lists(st.tuples(st.floats(0.5, 20), st.floats(0.5, 20)), min_size=1, max_size=6), st.integers(0, 2**32))
def test_mp_ts_single_play_matches_thompson(params, seed):
    bank = PosteriorBank.beta(params)
    a, b = gen(seed), gen(seed)
    for _ in range(20):
        assert mp_ts_select(bank, 1, a).arms == thompson_select(bank, b).arms


def test_mp_ts_policy_matches_thompson_policy():
    from banditlab.policies.sampling import ThompsonSampling

    env = StochasticEnv.bernoulli([0.3, 0.7, 0.5])
    a = simulate(MPTS(3, m=1, rng=gen(4, 1)), env, 300, gen(4))
    b = simulate(ThompsonSampling(3, rng=gen(4, 1)), env, 300, gen(4))
    assert a == b


def test_imp_ts_single_play_is_thompson():
    bank = PosteriorBank.beta([(3, 2), (2, 3), (5, 5)])
    a, b = gen(5), gen(5)
    for _ in range(50):
        assert imp_ts_select(bank, 1, a).arms == thompson_select(bank, b).arms


def test_imp_ts_all_arms():
    bank = PosteriorBank.beta([(3, 2), (2, 3), (5, 5)])
    assert imp_ts_select(bank, 3, gen(), means=np.array([0.1, 0.2, 0.3])).arms == (0, 1, 2)


def test_imp_ts_slot_split():
    bank, g = PosteriorBank.beta([(9, 1), (5, 5), (4, 6)]), gen(6)
    picks = [imp_ts_select(bank, 2, g, means=np.array([0.9, 0.5, 0.4])).arms for _ in range(10_000)]
    assert all(0 in p for p in picks)
    freq1 = np.mean([1 in p for p in picks])
    assert abs(freq1 - prob_beta_greater(5, 5, 4, 6)) <= 0.02


@pytest.mark.invariant
@given(st.integers(2, 6), st.data())
def test_multi_play_distinct_arms(k, data):
    m = data.draw(st.integers(1, k))
    seed = data.draw(st.integers(0, 2**32))
    env = StochasticEnv.bernoulli(np.linspace(0.1, 0.9, k))
    for cls in (MPTS, IMPTS):
        log = simulate(cls(k, m=m, rng=gen(seed, 1)), env, 30, gen(seed))
        for arms in log.arms:
            arms = (arms,) if np.isscalar(arms) else arms
            assert len(arms) == m and len(set(arms)) == m
