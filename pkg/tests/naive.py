"""Independent brute-force oracles used to cross-check the package.

Everything here deliberately avoids the package's conditioning caches,
marginal helpers, and the oracle dynamic program: marginals are computed by
direct double loops over the support, and the optimal pool value is found
by enumerating every decision-tree policy and simulating it realization by
realization.
"""

from __future__ import annotations

import itertools
from functools import lru_cache


def raw_value(instance, items, phi):
    return instance.utility.value(instance, tuple(sorted(set(items))), tuple(phi))


def naive_marginal(instance, item, observations: dict) -> float:
    num = 0.0
    den = 0.0
    dom = tuple(sorted(observations))
    dom_with = tuple(sorted(set(dom) | {item}))
    for phi, p in instance.prior.support():
        if all(phi[i] == s for i, s in observations.items()):
            den += p
            num += p * (raw_value(instance, dom_with, phi) - raw_value(instance, dom, phi))
    return num / den


def naive_threshold_uniform_value(instance, v: float, order) -> float:
    budget = int(instance.budget)
    threshold = v / (2.0 * budget)
    total = 0.0
    for phi, p in instance.prior.support():
        observations: dict = {}
        chosen: list = []
        for item in order:
            if len(chosen) >= budget:
                break
            if naive_marginal(instance, item, observations) >= threshold:
                chosen.append(item)
                observations[item] = phi[item]
        total += p * raw_value(instance, chosen, phi)
    return total


def naive_threshold_knapsack_value(instance, v: float, order, overshoot: bool = False) -> float:
    threshold = v / (2.0 * instance.budget)
    total = 0.0
    for phi, p in instance.prior.support():
        observations: dict = {}
        chosen: list = []
        spent = 0.0
        for item in order:
            cost = instance.costs[item]
            if naive_marginal(instance, item, observations) / cost >= threshold:
                if spent + cost > instance.budget:
                    if overshoot:
                        chosen.append(item)
                        observations[item] = phi[item]
                    break
                chosen.append(item)
                observations[item] = phi[item]
                spent += cost
        total += p * raw_value(instance, chosen, phi)
    return total


def _tree_lists(instance):
    """All decision-tree pool policies, memoized by (remaining pool, budget).

    A tree is None (stop) or (item, ((state, subtree), ...)) with one branch
    per state the item can take somewhere in the support.
    """
    states_of = {
        e: tuple(sorted({phi[e] for phi in instance.prior.realizations}))
        for e in instance.items
    }

    @lru_cache(maxsize=None)
    def trees(pool: tuple, budget: float) -> tuple:
        result = [None]
        for e in pool:
            if instance.costs[e] > budget:
                continue
            rest = tuple(x for x in pool if x != e)
            branch_options = [
                trees(rest, budget - instance.costs[e]) for _ in states_of[e]
            ]
            for combo in itertools.product(*branch_options):
                result.append((e, tuple(zip(states_of[e], combo))))
        return tuple(result)

    return trees(tuple(instance.items), instance.budget)


def _run_tree(tree, phi) -> list:
    chosen = []
    node = tree
    while node is not None:
        item, branches = node
        chosen.append(item)
        node = dict(branches)[phi[item]]
    return chosen


def naive_optimal_pool_value(instance) -> float:
    """Max expected utility over every decision-tree policy, by simulation."""
    best = float("-inf")
    for tree in _tree_lists(instance):
        total = 0.0
        for phi, p in instance.prior.support():
            total += p * raw_value(instance, _run_tree(tree, phi), phi)
        best = max(best, total)
    return best


def naive_pool_greedy_value(instance) -> float:
    budget = int(instance.budget)
    total = 0.0
    for phi, p in instance.prior.support():
        observations: dict = {}
        chosen: list = []
        for _ in range(budget):
            remaining = [e for e in instance.items if e not in observations]
            if not remaining:
                break
            best_item = min(
                remaining, key=lambda e: (-naive_marginal(instance, e, observations), e)
            )
            chosen.append(best_item)
            observations[best_item] = phi[best_item]
        total += p * raw_value(instance, chosen, phi)
    return total


def naive_best_singleton(instance) -> tuple[int, float]:
    best_item, best_value = 0, float("-inf")
    for e in instance.items:
        value = sum(p * raw_value(instance, [e], phi) for phi, p in instance.prior.support())
        if value > best_value:
            best_item, best_value = e, value
    return best_item, best_value
