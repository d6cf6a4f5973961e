"""Stream-based and pool-based policies, plus the exact pool-policy oracle.

Stream policies scan an adversarial arrival order and make an irrevocable
accept/skip decision per item:

* ``threshold_uniform``: accept an arriving item while fewer than B items
  are selected iff its conditional marginal gain is at least v / (2B).
  Requires unit costs and an integer budget.
* ``threshold_knapsack``: accept iff marginal gain per unit cost is at
  least v / (2B) and the item fits the remaining budget; the first passing
  item that does not fit terminates the whole scan.
* ``threshold_knapsack_plus``: identical, except the first passing item
  that violates the budget is selected before the scan terminates. The
  resulting trace may exceed the budget by that one item; the policy
  exists only for verification.
* ``mixed_singleton``: a seeded fair coin picks between selecting the best
  expected singleton and running ``threshold_knapsack``.

Pool policies may select any remaining item:

* ``pool_greedy``: B rounds of max-marginal selection (unit costs).
* ``pool_density_greedy``: max marginal-per-cost selection until the argmax
  item does not fit.
* ``best_singleton`` / ``empty`` / ``fixed_single_step``: trivial policies
  used as baselines and test probes.
* ``oracle``: the exact optimal pool policy, from a dynamic program over
  partial realizations.

A policy run never reads the state of an item it did not select, so a
decision depends only on the observations so far, the arriving item, the
threshold, the costs, and the budget.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import NonUniformCost
from .model import (
    EMPTY_OBSERVATION,
    Instance,
    PartialRealization,
    Realization,
    validate_order,
)
from .utility import _cached_value, _conditioned, _items_key, marginal_item

STREAM_ALGORITHMS = (
    "threshold_uniform",
    "threshold_knapsack",
    "threshold_knapsack_plus",
    "mixed_singleton",
)
POOL_ALGORITHMS = (
    "pool_greedy",
    "pool_density_greedy",
    "best_singleton",
    "oracle",
    "empty",
    "fixed_single_step",
)


@dataclass(frozen=True)
class StreamPolicySpec:
    """Declarative description of a stream policy run."""

    algorithm: str
    v: float
    v_provenance: str = "manual"
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in STREAM_ALGORITHMS:
            raise ValueError(f"unknown stream algorithm {self.algorithm!r}")
        if self.v <= 0:
            raise ValueError("threshold numerator v must be positive")


@dataclass(frozen=True)
class PoolPolicySpec:
    """Declarative description of a pool policy."""

    algorithm: str
    item: int | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in POOL_ALGORITHMS:
            raise ValueError(f"unknown pool algorithm {self.algorithm!r}")
        if self.algorithm == "fixed_single_step" and self.item is None:
            raise ValueError("fixed_single_step needs an item")


@dataclass(frozen=True)
class SelectionStep:
    item: int
    state: int
    marginal: float
    cumulative_cost: float


@dataclass(frozen=True)
class PolicyTrace:
    """The realized run of a policy on one (realization, order) pair."""

    selected: tuple[SelectionStep, ...]
    skipped: tuple[tuple[int, str], ...]
    final_value: float
    over_budget: bool = False

    @property
    def selected_items(self) -> tuple[int, ...]:
        return tuple(step.item for step in self.selected)

    @property
    def total_cost(self) -> float:
        return self.selected[-1].cumulative_cost if self.selected else 0.0


def _final_value(instance: Instance, selected: Sequence[int], phi: Realization) -> float:
    idx = instance.prior.index_of(tuple(phi))
    key = _items_key(selected)
    if idx is None:
        return instance.utility.value(instance, key, tuple(phi))
    return _cached_value(instance, key, idx)


def _require_uniform_integer_budget(instance: Instance, algorithm: str) -> int:
    if not instance.costs.uniform:
        raise NonUniformCost(f"{algorithm} requires every item cost to equal 1")
    budget = instance.budget
    if budget != int(budget):
        raise ValueError(f"{algorithm} requires an integer budget, got {budget!r}")
    return int(budget)


def run_threshold_uniform(
    instance: Instance,
    spec: StreamPolicySpec,
    order: Sequence[int],
    phi: Realization,
) -> PolicyTrace:
    """Scan the order, accepting items whose marginal gain reaches v / (2B)."""
    budget = _require_uniform_integer_budget(instance, "threshold_uniform")
    validate_order(order, instance.num_items)
    threshold = spec.v / (2.0 * budget)
    psi = EMPTY_OBSERVATION
    selected: list[SelectionStep] = []
    skipped: list[tuple[int, str]] = []
    for item in order:
        if len(selected) >= budget:
            break
        gain = marginal_item(instance, item, psi)
        if gain >= threshold:
            state = phi[item]
            psi = psi.observe(item, state)
            selected.append(SelectionStep(item, state, gain, float(len(selected) + 1)))
        else:
            skipped.append((item, "below_threshold"))
    return PolicyTrace(
        tuple(selected),
        tuple(skipped),
        _final_value(instance, [s.item for s in selected], phi),
    )


def _run_threshold_knapsack(
    instance: Instance,
    spec: StreamPolicySpec,
    order: Sequence[int],
    phi: Realization,
    allow_overshoot: bool,
) -> PolicyTrace:
    validate_order(order, instance.num_items)
    threshold = spec.v / (2.0 * instance.budget)
    psi = EMPTY_OBSERVATION
    selected: list[SelectionStep] = []
    skipped: list[tuple[int, str]] = []
    spent = 0.0
    over_budget = False
    for item in order:
        cost = instance.costs[item]
        gain = marginal_item(instance, item, psi)
        if gain / cost >= threshold:
            if spent + cost > instance.budget:
                # First passing item that does not fit ends the whole scan.
                if allow_overshoot:
                    state = phi[item]
                    spent += cost
                    psi = psi.observe(item, state)
                    selected.append(SelectionStep(item, state, gain, spent))
                    over_budget = True
                else:
                    skipped.append((item, "budget_break"))
                break
            state = phi[item]
            spent += cost
            psi = psi.observe(item, state)
            selected.append(SelectionStep(item, state, gain, spent))
        else:
            skipped.append((item, "below_threshold"))
    return PolicyTrace(
        tuple(selected),
        tuple(skipped),
        _final_value(instance, [s.item for s in selected], phi),
        over_budget=over_budget,
    )


def run_threshold_knapsack(
    instance: Instance,
    spec: StreamPolicySpec,
    order: Sequence[int],
    phi: Realization,
) -> PolicyTrace:
    """Density-threshold scan with a hard stop at the first unfitting passer."""
    return _run_threshold_knapsack(instance, spec, order, phi, allow_overshoot=False)


def run_threshold_knapsack_plus(
    instance: Instance,
    spec: StreamPolicySpec,
    order: Sequence[int],
    phi: Realization,
) -> PolicyTrace:
    """Like run_threshold_knapsack, but the first unfitting passer is selected."""
    return _run_threshold_knapsack(instance, spec, order, phi, allow_overshoot=True)


def best_singleton(instance: Instance) -> tuple[int, float]:
    """The item maximizing E[f({e}, Phi)], ties broken by lowest item id."""
    best_item = 0
    best_value = float("-inf")
    for item in instance.items:
        value = sum(
            p * _cached_value(instance, (item,), idx)
            for idx, p in enumerate(instance.prior.probabilities)
        )
        if value > best_value:
            best_item, best_value = item, value
    return best_item, best_value


def _singleton_trace(instance: Instance, item: int, phi: Realization) -> PolicyTrace:
    if instance.costs[item] > instance.budget:
        return PolicyTrace(
            (),
            ((item, "singleton_unaffordable"),),
            _final_value(instance, [], phi),
        )
    gain = marginal_item(instance, item, EMPTY_OBSERVATION)
    return PolicyTrace(
        (SelectionStep(item, phi[item], gain, instance.costs[item]),),
        (),
        _final_value(instance, [item], phi),
    )


def run_mixed_singleton(
    instance: Instance,
    spec: StreamPolicySpec,
    order: Sequence[int],
    phi: Realization,
) -> PolicyTrace:
    """A seeded fair coin picks the best-singleton branch or the knapsack scan.

    Expected utilities are computed analytically elsewhere; this trace form
    exists so single runs are reproducible per seed.
    """
    if spec.seed is None:
        raise ValueError("mixed_singleton requires a seed for its coin")
    coin_heads = random.Random(spec.seed).random() < 0.5
    if coin_heads:
        item, _ = best_singleton(instance)
        return _singleton_trace(instance, item, phi)
    return run_threshold_knapsack(instance, spec, order, phi)


def run_stream_policy(
    instance: Instance,
    spec: StreamPolicySpec,
    order: Sequence[int],
    phi: Realization,
) -> PolicyTrace:
    runner = {
        "threshold_uniform": run_threshold_uniform,
        "threshold_knapsack": run_threshold_knapsack,
        "threshold_knapsack_plus": run_threshold_knapsack_plus,
        "mixed_singleton": run_mixed_singleton,
    }[spec.algorithm]
    return runner(instance, spec, order, phi)


def run_pool_greedy(instance: Instance, phi: Realization) -> PolicyTrace:
    """B rounds of exact max-marginal selection; ties go to the lowest item id."""
    budget = _require_uniform_integer_budget(instance, "pool_greedy")
    psi = EMPTY_OBSERVATION
    selected: list[SelectionStep] = []
    for _ in range(budget):
        candidates = [e for e in instance.items if psi.state_of(e) is None]
        if not candidates:
            break
        best_item = max(candidates, key=lambda e: (marginal_item(instance, e, psi), -e))
        gain = marginal_item(instance, best_item, psi)
        state = phi[best_item]
        psi = psi.observe(best_item, state)
        selected.append(SelectionStep(best_item, state, gain, float(len(selected) + 1)))
    return PolicyTrace(
        tuple(selected), (), _final_value(instance, [s.item for s in selected], phi)
    )


def run_pool_density_greedy(instance: Instance, phi: Realization) -> PolicyTrace:
    """Max marginal-per-cost selection until the argmax item does not fit."""
    psi = EMPTY_OBSERVATION
    selected: list[SelectionStep] = []
    skipped: list[tuple[int, str]] = []
    spent = 0.0
    while True:
        candidates = [e for e in instance.items if psi.state_of(e) is None]
        if not candidates:
            break
        best_item = max(
            candidates,
            key=lambda e: (marginal_item(instance, e, psi) / instance.costs[e], -e),
        )
        if spent + instance.costs[best_item] > instance.budget:
            skipped.append((best_item, "budget_break"))
            break
        gain = marginal_item(instance, best_item, psi)
        state = phi[best_item]
        spent += instance.costs[best_item]
        psi = psi.observe(best_item, state)
        selected.append(SelectionStep(best_item, state, gain, spent))
    return PolicyTrace(
        tuple(selected),
        tuple(skipped),
        _final_value(instance, [s.item for s in selected], phi),
    )


@dataclass(frozen=True)
class OracleNode:
    """One decision of the optimal pool policy; item None means stop."""

    item: int | None
    children: Mapping[int, "OracleNode"] = field(default_factory=dict)


@dataclass(frozen=True)
class OracleResult:
    """Best achievable conditional policy gain and the tree realizing it."""

    delta: float
    tree: OracleNode


def oracle_optimal_pool(
    instance: Instance,
    psi0: PartialRealization = EMPTY_OBSERVATION,
    budget: float | None = None,
    pool: Sequence[int] | None = None,
) -> OracleResult:
    """Exact best conditional policy gain over pool policies.

    Dynamic program over partial realizations: at each knowledge state the
    policy either stops or selects an affordable unobserved item from the
    pool, observing its state. Gains are measured on the policy's own
    selected set; the returned delta subtracts the expected utility of the
    conditioning domain, matching the conditional marginal of a policy.
    Stopping early is always allowed, so the program stays correct on
    non-monotone utility tables. Deterministic: ties prefer stopping, then
    the lowest item id. Results are memoized per (conditioning, pool,
    budget) on the instance.
    """
    limit = instance.budget if budget is None else budget
    chosen_pool = tuple(sorted(instance.items if pool is None else pool))
    call_cache = instance.cache("oracle")
    call_key = (psi0.observations, chosen_pool, limit)
    hit = call_cache.get(call_key)
    if hit is not None:
        return hit

    base_domain = set(psi0.domain)
    memo: dict[tuple, tuple[float, OracleNode]] = {}

    def solve(psi: PartialRealization, spent: float) -> tuple[float, OracleNode]:
        key = psi.observations
        cached = memo.get(key)
        if cached is not None:
            return cached
        indices, probs = _conditioned(instance, psi)
        own = _items_key(e for e in psi.domain if e not in base_domain)
        best_gain = 0.0
        best_item: int | None = None
        best_children: dict[int, OracleNode] = {}
        for item in chosen_pool:
            if psi.state_of(item) is not None:
                continue
            cost = instance.costs[item]
            if spent + cost > limit:
                continue
            with_key = _items_key(own + (item,))
            gain = 0.0
            children: dict[int, OracleNode] = {}
            by_state: dict[int, float] = {}
            for idx, p in zip(indices, probs):
                gain += p * (
                    _cached_value(instance, with_key, idx)
                    - _cached_value(instance, own, idx)
                )
                state = instance.prior.realizations[idx][item]
                by_state[state] = by_state.get(state, 0.0) + p
            for state in sorted(by_state):
                sub_gain, sub_node = solve(psi.observe(item, state), spent + cost)
                gain += by_state[state] * sub_gain
                children[state] = sub_node
            if gain > best_gain:
                best_gain = gain
                best_item = item
                best_children = children
        node = OracleNode(best_item, best_children if best_item is not None else {})
        memo[key] = (best_gain, node)
        return best_gain, node

    root_gain, root_node = solve(psi0, 0.0)
    indices, probs = _conditioned(instance, psi0)
    baseline = sum(
        p
        * (
            _cached_value(instance, (), idx)
            - _cached_value(instance, psi0.domain, idx)
        )
        for idx, p in zip(indices, probs)
    )
    result = OracleResult(root_gain + baseline, root_node)
    call_cache[call_key] = result
    return result


def _oracle_trace(instance: Instance, phi: Realization) -> PolicyTrace:
    idx = instance.prior.index_of(tuple(phi))
    if idx is None:
        raise ValueError("the oracle policy is only defined on support realizations")
    node = oracle_optimal_pool(instance).tree
    psi = EMPTY_OBSERVATION
    selected: list[SelectionStep] = []
    spent = 0.0
    while node.item is not None:
        item = node.item
        gain = marginal_item(instance, item, psi)
        state = phi[item]
        spent += instance.costs[item]
        psi = psi.observe(item, state)
        selected.append(SelectionStep(item, state, gain, spent))
        node = node.children[state]
    return PolicyTrace(
        tuple(selected), (), _final_value(instance, [s.item for s in selected], phi)
    )


def simulate_pool_trace(
    instance: Instance, spec: PoolPolicySpec, phi: Realization
) -> PolicyTrace:
    """Run a pool policy on one realization and record its trace."""
    if spec.algorithm == "pool_greedy":
        return run_pool_greedy(instance, phi)
    if spec.algorithm == "pool_density_greedy":
        return run_pool_density_greedy(instance, phi)
    if spec.algorithm == "best_singleton":
        item, _ = best_singleton(instance)
        return _singleton_trace(instance, item, phi)
    if spec.algorithm == "oracle":
        return _oracle_trace(instance, phi)
    if spec.algorithm == "empty":
        return PolicyTrace((), (), _final_value(instance, [], phi))
    if spec.algorithm == "fixed_single_step":
        assert spec.item is not None
        return _singleton_trace(instance, spec.item, phi)
    raise ValueError(f"unknown pool algorithm {spec.algorithm!r}")
