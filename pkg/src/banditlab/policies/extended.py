"""Continuum-armed HOO and multi-play Thompson sampling (MP-TS, IMP-TS)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core import DomainError, Policy, PolicyDecision, argmax_tiebreak, top_m_tiebreak
from .sampling import PosteriorBank

# ---------------------------------------------------------------------------
# HOO
# ---------------------------------------------------------------------------


def hoo_uvalue(mean: float, count: int, total: float, depth: int, rho: float = 0.5, v1: float = 1.0) -> float:
    """mean + sqrt(2 ln n / N) + v1 rho^d, or +inf for an unvisited node."""
    if not 0.0 < rho < 1.0 or v1 <= 0:
        raise DomainError("HOO needs 0 < rho < 1 and v1 > 0")
    if count < 1:
        return math.inf
    return mean + math.sqrt(2.0 * math.log(total) / count) + v1 * rho**depth


@dataclass
class HooNode:
    depth: int
    lo: float
    hi: float
    count: int = 0
    mean: float = 0.0
    b: float = math.inf
    children: Optional[tuple["HooNode", "HooNode"]] = None

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def split(self) -> None:
        mid = self.midpoint
        self.children = (HooNode(self.depth + 1, self.lo, mid), HooNode(self.depth + 1, mid, self.hi))


@dataclass
class HooTree:
    rho: float = 0.5
    v1: float = 1.0
    max_depth: int = 40
    root: HooNode = field(default_factory=lambda: HooNode(0, 0.0, 1.0))
    total: int = 0
    splits: int = 0
    _path: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        hoo_uvalue(0.0, 0, 1, 0, self.rho, self.v1)

    def descend(self, rng: np.random.Generator) -> list[HooNode]:
        """Root-to-leaf path following the larger B-value (ties at random)."""
        node, path = self.root, [self.root]
        while node.children is not None:
            left, right = node.children
            if left.b == right.b:
                node = node.children[int(rng.integers(2))]
            else:
                node = left if left.b > right.b else right
            path.append(node)
        return path

    def recommend(self) -> float:
        """Midpoint of the leaf reached by repeatedly taking the most-visited child."""
        node = self.root
        while node.children is not None:
            left, right = node.children
            if max(left.count, right.count) == 0:
                break
            node = left if left.count >= right.count else right
        return node.midpoint

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if node.children:
                stack.extend(node.children)

    def depth(self) -> int:
        return max(n.depth for n in self.nodes() if n.count > 0) if self.total else 0


def hoo_step(tree: HooTree, rng: np.random.Generator) -> tuple[float, HooTree]:
    """Choose the next point; the tree keeps the path until :func:`hoo_observe`."""
    path = tree.descend(rng)
    leaf = path[-1]
    x = float(leaf.lo + (leaf.hi - leaf.lo) * rng.random())
    if leaf.depth < tree.max_depth:
        leaf.split()
        tree.splits += 1
    tree._path = path
    return x, tree


def hoo_observe(tree: HooTree, reward: float) -> HooTree:
    """Fold ``reward`` into every node on the last path and back up B-values."""
    if not tree._path:
        raise DomainError("hoo_observe called before hoo_step")
    tree.total += 1
    for node in tree._path:
        node.count += 1
        node.mean += (reward - node.mean) / node.count
    log_n2 = 2.0 * math.log(tree.total)
    for node in reversed(tree._path):
        u = node.mean + math.sqrt(log_n2 / node.count) + tree.v1 * tree.rho**node.depth
        node.b = u if node.children is None else min(u, max(node.children[0].b, node.children[1].b))
    tree._path = []
    return tree


class HOO(Policy):
    """Hierarchical optimistic optimisation over [0, 1]; decisions carry a point, not an arm index."""

    name = "hoo"
    continuum = True

    def __init__(self, n_arms=None, rho: float = 0.5, v1: float = 1.0, max_depth: int = 40, rng=None):
        super().__init__(1, rng)
        self.tree = HooTree(rho, v1, max_depth)

    def select(self, t, context=None):
        x, _ = hoo_step(self.tree, self.rng)
        return PolicyDecision((x,))

    def update(self, t, arms, rewards, context=None):
        hoo_observe(self.tree, float(rewards[0]))

    def recommend(self) -> float:
        return self.tree.recommend()


# ---------------------------------------------------------------------------
# Multi-play Thompson sampling
# ---------------------------------------------------------------------------


def _check_m(m: int, k: int) -> None:
    if not 1 <= m <= k:
        raise DomainError(f"m={m} must lie in [1, {k}]")


def mp_ts_select(bank: PosteriorBank, m: int, rng: np.random.Generator) -> PolicyDecision:
    """One posterior draw per arm; the ``m`` largest draws are played."""
    _check_m(m, bank.n_arms)
    draws = bank.draw(rng)
    return PolicyDecision(top_m_tiebreak(draws, m, rng), draws)


def empirical_means(bank: PosteriorBank) -> np.ndarray:
    """Observed reward means, +inf for arms never played."""
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(bank.counts > 0, bank.sums / np.maximum(bank.counts, 1), np.inf)


def imp_ts_select(bank: PosteriorBank, m: int, rng: np.random.Generator,
                  means: Optional[np.ndarray] = None) -> PolicyDecision:
    """The m-1 best empirical means plus one Thompson pick among the rest."""
    _check_m(m, bank.n_arms)
    means = empirical_means(bank) if means is None else np.asarray(means, dtype=float)
    greedy = top_m_tiebreak(means, m - 1, rng) if m > 1 else ()
    draws = bank.draw(rng)
    masked = draws.copy()
    masked[list(greedy)] = -np.inf
    last = argmax_tiebreak(masked, rng)
    return PolicyDecision(tuple(sorted(greedy + (last,))), draws)


class MPTS(Policy):
    name = "mp-ts"

    def __init__(self, n_arms, m: int = 1, likelihood: str = "bernoulli", rng=None, **prior):
        super().__init__(n_arms, rng)
        _check_m(m, self.n_arms)
        self.plays = int(m)
        self.bank = PosteriorBank(n_arms, likelihood, **prior)

    def select(self, t, context=None):
        return mp_ts_select(self.bank, self.plays, self.rng)

    def update(self, t, arms, rewards, context=None):
        for a, r in zip(arms, rewards):
            self.bank.update(a, float(r))


class IMPTS(MPTS):
    name = "imp-ts"

    def select(self, t, context=None):
        return imp_ts_select(self.bank, self.plays, self.rng)
