"""Utility functions over (item set, realization) and structural property checkers.

Four families are built in:

* ``coverage``: each item covers a state-dependent subset of a finite
  universe; the utility is the size of the union covered.
* ``viral``: a one-hop cascade on a small directed graph. Selecting a node
  influences itself plus the endpoints of its live out-edges; the state of
  a node encodes which of its out-edges are live. Utility is the number of
  influenced nodes. Propagation deliberately stops after one hop: deeper
  cascades under per-node feedback lose the diminishing-returns structure
  the checkers verify.
* ``versionspace``: identification-style utility. A hypothesis is a support
  realization; observing the states of a set of items eliminates every
  hypothesis that disagrees somewhere on the set. Utility is the eliminated
  fraction of competitor mass, so full identification scores exactly 1.
* ``table``: an explicit value for every (subset, support realization) pair,
  used for adversarial and counterexample constructions.

The checkers verify adaptive monotonicity, adaptive submodularity,
semi-policywise submodularity, and policywise submodularity exactly over
the enumerated partial-realization space, and return a re-checkable
witness on failure.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import UnknownRealization
from .model import (
    DEFAULT_PARTIAL_CAP,
    EMPTY_OBSERVATION,
    EPSILON,
    Instance,
    PartialRealization,
    Realization,
    enumerate_reachable_partials,
)


def _items_key(items: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(set(items)))


@dataclass(frozen=True)
class CoverageUtility:
    """Stochastic coverage: item e in state s covers ``covers[e][s]``."""

    universe_size: int
    covers: tuple[tuple[frozenset[int], ...], ...]

    kind = "coverage"

    def validate(self, instance: Instance) -> None:
        if len(self.covers) != instance.num_items:
            raise ValueError("coverage table must list every item")
        for per_item in self.covers:
            if len(per_item) != instance.num_states:
                raise ValueError("coverage table must list every state")
            for covered in per_item:
                if any(not (0 <= u < self.universe_size) for u in covered):
                    raise ValueError("covered element outside the universe")

    def value(self, instance: Instance, items: tuple[int, ...], phi: Realization) -> float:
        covered: set[int] = set()
        for e in items:
            covered |= self.covers[e][phi[e]]
        return float(len(covered))

    def params_to_json(self) -> dict:
        return {
            "universe_size": self.universe_size,
            "covers": [[sorted(s) for s in per_item] for per_item in self.covers],
        }


@dataclass(frozen=True)
class ViralUtility:
    """One-hop influence: a selected node influences itself and live out-neighbors.

    State s of item e marks out-edge j live iff bit j of ``s mod 2**deg(e)``
    is set, so the function is total over any state alphabet.
    """

    num_nodes: int
    out_edges: tuple[tuple[int, ...], ...]

    kind = "viral"

    def validate(self, instance: Instance) -> None:
        if len(self.out_edges) != instance.num_items:
            raise ValueError("out_edges must list every item")
        if self.num_nodes < instance.num_items:
            raise ValueError("items are nodes, so num_nodes must be at least num_items")
        for targets in self.out_edges:
            if any(not (0 <= t < self.num_nodes) for t in targets):
                raise ValueError("edge target outside the node set")

    def value(self, instance: Instance, items: tuple[int, ...], phi: Realization) -> float:
        influenced: set[int] = set(items)
        for e in items:
            targets = self.out_edges[e]
            if not targets:
                continue
            mask = phi[e] % (1 << len(targets))
            for j, target in enumerate(targets):
                if mask >> j & 1:
                    influenced.add(target)
        return float(len(influenced))

    def params_to_json(self) -> dict:
        return {
            "num_nodes": self.num_nodes,
            "out_edges": [list(t) for t in self.out_edges],
        }


@dataclass(frozen=True)
class VersionSpaceUtility:
    """Eliminated fraction of competitor hypothesis mass.

    Hypotheses are the support realizations of the instance prior. Observing
    the realized states of ``items`` keeps the hypotheses that agree there;
    the score is the prior mass of eliminated competitors, normalized so
    that distinguishing the truth from every other hypothesis scores 1.
    """

    kind = "versionspace"

    def validate(self, instance: Instance) -> None:
        return None

    def value(self, instance: Instance, items: tuple[int, ...], phi: Realization) -> float:
        remaining = 0.0
        truth_mass = 0.0
        for candidate, p in instance.prior.support():
            if candidate == phi:
                truth_mass = p
                continue
            if all(candidate[e] == phi[e] for e in items):
                remaining += p
        initial = 1.0 - truth_mass
        if initial <= 0.0:
            return 0.0
        return 1.0 - remaining / initial

    def params_to_json(self) -> dict:
        return {}


@dataclass(frozen=True)
class TableUtility:
    """Explicit utility table over (sorted item subset, support index)."""

    values: Mapping[tuple[tuple[int, ...], int], float]

    kind = "table"

    def validate(self, instance: Instance) -> None:
        import itertools

        for key, value in self.values.items():
            if value < 0:
                raise ValueError(f"table value for {key} is negative")
        for r in range(instance.num_items + 1):
            for subset in itertools.combinations(instance.items, r):
                for idx in range(len(instance.prior)):
                    if (subset, idx) not in self.values:
                        raise ValueError(
                            f"table is missing value for subset {subset}, realization {idx}"
                        )

    def value(self, instance: Instance, items: tuple[int, ...], phi: Realization) -> float:
        idx = instance.prior.index_of(phi)
        if idx is None:
            raise UnknownRealization(
                f"realization {phi!r} is outside the prior support"
            )
        return float(self.values[(items, idx)])

    def params_to_json(self) -> dict:
        return {
            "values": [
                {"subset": list(subset), "realization": idx, "f": value}
                for (subset, idx), value in sorted(self.values.items())
            ]
        }


def utility_value(instance: Instance, items: Iterable[int], phi: Realization) -> float:
    """f(S, phi) for an arbitrary item set and realization."""
    key = _items_key(items)
    idx = instance.prior.index_of(tuple(phi))
    if idx is None:
        return instance.utility.value(instance, key, tuple(phi))
    return _cached_value(instance, key, idx)


def _cached_value(instance: Instance, items_key: tuple[int, ...], phi_idx: int) -> float:
    cache = instance.cache("f")
    cache_key = (items_key, phi_idx)
    hit = cache.get(cache_key)
    if hit is None:
        hit = instance.utility.value(
            instance, items_key, instance.prior.realizations[phi_idx]
        )
        cache[cache_key] = hit
    return hit


def _conditioned(instance: Instance, psi: PartialRealization):
    """Consistent support indices and renormalized probabilities for psi."""
    cache = instance.cache("cond")
    hit = cache.get(psi.observations)
    if hit is None:
        indices = instance.prior.consistent_indices(psi)
        if not indices:
            from .errors import ZeroProbabilityObservation

            raise ZeroProbabilityObservation(
                f"no support realization is consistent with {psi.observations}"
            )
        mass = sum(instance.prior.probabilities[i] for i in indices)
        probs = tuple(instance.prior.probabilities[i] / mass for i in indices)
        hit = (indices, probs)
        cache[psi.observations] = hit
    return hit


def marginal_item(instance: Instance, item: int, psi: PartialRealization) -> float:
    """Conditional expected marginal utility of adding one item on top of psi."""
    if psi.state_of(item) is not None:
        return 0.0
    cache = instance.cache("marginal")
    cache_key = (item, psi.observations)
    hit = cache.get(cache_key)
    if hit is not None:
        return hit
    indices, probs = _conditioned(instance, psi)
    base_key = psi.domain
    with_key = _items_key(base_key + (item,))
    total = 0.0
    for idx, p in zip(indices, probs):
        total += p * (_cached_value(instance, with_key, idx) - _cached_value(instance, base_key, idx))
    cache[cache_key] = total
    return total


def expected_empty_value(instance: Instance) -> float:
    """E[f(empty set, Phi)]; zero for the built-in families, free for tables."""
    return sum(
        p * _cached_value(instance, (), i)
        for i, p in enumerate(instance.prior.probabilities)
    )


def expected_set_value(instance: Instance, items: Iterable[int], psi: PartialRealization) -> float:
    """E[f(items, Phi) | Phi consistent with psi]."""
    key = _items_key(items)
    indices, probs = _conditioned(instance, psi)
    return sum(p * _cached_value(instance, key, idx) for idx, p in zip(indices, probs))


def marginal_policy(instance: Instance, pool_spec, psi: PartialRealization) -> float:
    """Conditional expected marginal utility of a pool policy on top of psi.

    The policy is simulated from scratch on every realization consistent
    with psi; its own selected set is scored and the expected utility of
    the already-observed domain is subtracted.
    """
    from .policies import simulate_pool_trace  # checker-level dependency, kept lazy

    indices, probs = _conditioned(instance, psi)
    base_key = psi.domain
    total = 0.0
    for idx, p in zip(indices, probs):
        phi = instance.prior.realizations[idx]
        trace = simulate_pool_trace(instance, pool_spec, phi)
        selected = _items_key(step.item for step in trace.selected)
        total += p * (_cached_value(instance, selected, idx) - _cached_value(instance, base_key, idx))
    return total


@dataclass(frozen=True)
class PropertyWitness:
    """A violated inequality ``lhs >= rhs - epsilon`` with its ingredients."""

    description: str
    lhs: float
    rhs: float
    psi: PartialRealization | None = None
    psi_prime: PartialRealization | None = None
    item: int | None = None
    subset: tuple[int, ...] | None = None

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class PropertyReport:
    property: str
    holds: bool
    witness: PropertyWitness | None
    pairs_checked: int

    def to_json_dict(self) -> dict:
        payload: dict = {
            "property": self.property,
            "holds": self.holds,
            "pairs_checked": self.pairs_checked,
        }
        if self.witness is not None:
            payload["witness"] = {
                "description": self.witness.description,
                "lhs": self.witness.lhs,
                "rhs": self.witness.rhs,
                "margin": self.witness.margin,
                "psi": list(self.witness.psi.observations) if self.witness.psi is not None else None,
                "psi_prime": (
                    list(self.witness.psi_prime.observations)
                    if self.witness.psi_prime is not None
                    else None
                ),
                "item": self.witness.item,
                "subset": list(self.witness.subset) if self.witness.subset is not None else None,
            }
        else:
            payload["witness"] = None
        return payload


def _all_partials(instance: Instance, max_partials: int) -> list[PartialRealization]:
    return enumerate_reachable_partials(
        instance, instance.costs.total(instance.items), max_partials
    )


def _sub_partials(psi: PartialRealization) -> list[PartialRealization]:
    import itertools

    subs = []
    for r in range(len(psi.observations) + 1):
        for chosen in itertools.combinations(psi.observations, r):
            subs.append(PartialRealization(chosen))
    subs.sort(key=PartialRealization.sort_key)
    return subs


def check_adaptive_monotone(
    instance: Instance, max_partials: int = DEFAULT_PARTIAL_CAP
) -> PropertyReport:
    """Verify that every conditional marginal gain is non-negative."""
    checked = 0
    for psi in _all_partials(instance, max_partials):
        observed = set(psi.domain)
        for item in instance.items:
            if item in observed:
                continue
            checked += 1
            gain = marginal_item(instance, item, psi)
            if gain < -EPSILON:
                return PropertyReport(
                    "adaptive_monotone",
                    False,
                    PropertyWitness(
                        "marginal_item(item, psi) >= 0 violated",
                        lhs=gain,
                        rhs=0.0,
                        psi=psi,
                        item=item,
                    ),
                    checked,
                )
    return PropertyReport("adaptive_monotone", True, None, checked)


def check_adaptive_submodular(
    instance: Instance, max_partials: int = DEFAULT_PARTIAL_CAP
) -> PropertyReport:
    """Verify diminishing conditional marginals over all nested observation pairs."""
    checked = 0
    for psi_large in _all_partials(instance, max_partials):
        observed = set(psi_large.domain)
        for psi_small in _sub_partials(psi_large):
            for item in instance.items:
                if item in observed:
                    continue
                checked += 1
                early = marginal_item(instance, item, psi_small)
                late = marginal_item(instance, item, psi_large)
                if early < late - EPSILON:
                    return PropertyReport(
                        "adaptive_submodular",
                        False,
                        PropertyWitness(
                            "marginal_item(item, psi) >= marginal_item(item, psi') violated",
                            lhs=early,
                            rhs=late,
                            psi=psi_small,
                            psi_prime=psi_large,
                            item=item,
                        ),
                        checked,
                    )
    return PropertyReport("adaptive_submodular", True, None, checked)


def check_semi_policywise(
    instance: Instance, max_partials: int = DEFAULT_PARTIAL_CAP
) -> PropertyReport:
    """Verify that the unconditioned optimum dominates every conditional policy gain."""
    from .policies import oracle_optimal_pool  # checker-level dependency, kept lazy

    optimum = (
        oracle_optimal_pool(instance).delta + expected_empty_value(instance)
    )
    checked = 0
    for psi in _all_partials(instance, max_partials):
        checked += 1
        conditional_best = oracle_optimal_pool(instance, psi).delta
        if optimum < conditional_best - EPSILON:
            return PropertyReport(
                "semi_policywise",
                False,
                PropertyWitness(
                    "optimal pool value >= best conditional policy gain violated",
                    lhs=optimum,
                    rhs=conditional_best,
                    psi=psi,
                ),
                checked,
            )
    return PropertyReport("semi_policywise", True, None, checked)


def _policywise_subsets(
    pool: tuple[int, ...], mode: str, num_random: int, rng: random.Random
) -> list[tuple[int, ...]]:
    import itertools

    if mode == "exhaustive":
        subsets = []
        for r in range(len(pool) + 1):
            subsets.extend(itertools.combinations(pool, r))
        return subsets
    subsets = [pool]
    seen = {pool}
    for _ in range(num_random):
        chosen = tuple(e for e in pool if rng.random() < 0.5)
        if chosen not in seen:
            seen.add(chosen)
            subsets.append(chosen)
    return subsets


def check_policywise(
    instance: Instance,
    budget: float | None = None,
    subset_mode: str = "default",
    num_random_subsets: int = 8,
    seed: int = 0,
    max_partials: int = DEFAULT_PARTIAL_CAP,
) -> PropertyReport:
    """Falsifier for policywise submodularity at one knapsack constraint.

    For every nested pair of affordable observations and every tested subset
    S of the unobserved items, the best achievable gain restricted to S and
    the residual budget must not increase when conditioning on more
    observations. The subset family is a deterministic sample, so a passing
    report is evidence, not proof; a failing report carries a counterexample.
    """
    from .policies import oracle_optimal_pool  # checker-level dependency, kept lazy

    cap = instance.budget if budget is None else budget
    partials = [
        psi
        for psi in _all_partials(instance, max_partials)
        if instance.costs.total(psi.domain) <= cap
    ]
    checked = 0
    for index, psi in enumerate(partials):
        pool = tuple(e for e in instance.items if psi.state_of(e) is None)
        residual = cap - instance.costs.total(psi.domain)
        rng = random.Random(seed * 1_000_003 + index)
        for subset in _policywise_subsets(pool, subset_mode, num_random_subsets, rng):
            for psi_prime in _sub_partials(psi):
                checked += 1
                before = oracle_optimal_pool(
                    instance, psi_prime, budget=residual, pool=subset
                ).delta
                after = oracle_optimal_pool(
                    instance, psi, budget=residual, pool=subset
                ).delta
                if before < after - EPSILON:
                    return PropertyReport(
                        "policywise",
                        False,
                        PropertyWitness(
                            "restricted best gain increased under more observations",
                            lhs=before,
                            rhs=after,
                            psi=psi,
                            psi_prime=psi_prime,
                            subset=subset,
                        ),
                        checked,
                    )
    return PropertyReport("policywise", True, None, checked)


def run_all_checkers(
    instance: Instance, max_partials: int = DEFAULT_PARTIAL_CAP
) -> dict[str, PropertyReport]:
    return {
        "adaptive_monotone": check_adaptive_monotone(instance, max_partials),
        "adaptive_submodular": check_adaptive_submodular(instance, max_partials),
        "semi_policywise": check_semi_policywise(instance, max_partials),
        "policywise": check_policywise(instance, max_partials=max_partials),
    }
