"""Probability substrate: items, realizations, joint priors, and partial realizations.

Every value here is immutable after construction; operations are pure
functions, so instances can be shared freely across threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    ProbabilityNotNormalized,
    StateSpaceTooLarge,
    ZeroProbabilityObservation,
)

# Single comparison tolerance for every verified inequality in the package.
EPSILON = 1e-9
# Tolerance for prior normalization checks.
PROB_TOLERANCE = 1e-12
# Default cap on enumerated partial realizations.
DEFAULT_PARTIAL_CAP = 2_000_000

ItemId = int
StateId = int
# A realization assigns a state to every item: states[item] -> state.
Realization = tuple
# An arrival order is a permutation of all item ids.
ArrivalOrder = tuple


@dataclass(frozen=True)
class PartialRealization:
    """States observed for a subset of items, stored sorted by item id."""

    observations: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        items = [item for item, _ in self.observations]
        if items != sorted(set(items)):
            raise ValueError("observations must be sorted by item id with no duplicates")

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[int, int]]) -> "PartialRealization":
        return PartialRealization(tuple(sorted(pairs)))

    @property
    def domain(self) -> tuple[int, ...]:
        return tuple(item for item, _ in self.observations)

    def __len__(self) -> int:
        return len(self.observations)

    def state_of(self, item: int) -> int | None:
        for observed, state in self.observations:
            if observed == item:
                return state
        return None

    def observe(self, item: int, state: int) -> "PartialRealization":
        if self.state_of(item) is not None:
            raise ValueError(f"item {item} already observed")
        return PartialRealization(tuple(sorted(self.observations + ((item, state),))))

    def restricted_to(self, items: Iterable[int]) -> "PartialRealization":
        wanted = set(items)
        return PartialRealization(
            tuple(obs for obs in self.observations if obs[0] in wanted)
        )

    def is_subrealization_of(self, other: "PartialRealization") -> bool:
        return set(self.observations) <= set(other.observations)

    def sort_key(self) -> tuple:
        return (self.domain, tuple(state for _, state in self.observations))


EMPTY_OBSERVATION = PartialRealization()


def consistent(phi: Realization, psi: PartialRealization) -> bool:
    """True iff the full realization agrees with every observation in psi."""
    return all(phi[item] == state for item, state in psi.observations)


@dataclass(frozen=True)
class Prior:
    """Explicit joint distribution over full realizations.

    The support is an explicit table so conditioning and expectations are
    exact; dependence between item states is allowed and common.
    """

    realizations: tuple[Realization, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.realizations) != len(self.probabilities):
            raise ValueError("realizations and probabilities must have equal length")
        if not self.realizations:
            raise ValueError("prior support must be non-empty")
        if len(set(self.realizations)) != len(self.realizations):
            raise ValueError("prior support realizations must be pairwise distinct")
        for p in self.probabilities:
            if not (0.0 < p <= 1.0):
                raise ValueError(f"support probability {p} outside (0, 1]")
        total = sum(self.probabilities)
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise ProbabilityNotNormalized(
                f"prior probabilities sum to {total!r}, expected 1 within {PROB_TOLERANCE}"
            )

    def __len__(self) -> int:
        return len(self.realizations)

    def support(self) -> Iterator[tuple[Realization, float]]:
        return zip(self.realizations, self.probabilities)

    def index_of(self, phi: Realization) -> int | None:
        try:
            return self.realizations.index(phi)
        except ValueError:
            return None

    def consistent_indices(self, psi: PartialRealization) -> tuple[int, ...]:
        return tuple(
            i for i, phi in enumerate(self.realizations) if consistent(phi, psi)
        )


def conditional_distribution(prior: Prior, psi: PartialRealization) -> Prior:
    """Restrict the support to realizations consistent with psi and renormalize."""
    if not psi.observations:
        return prior
    indices = prior.consistent_indices(psi)
    if not indices:
        raise ZeroProbabilityObservation(
            f"no support realization is consistent with observations {psi.observations}"
        )
    mass = sum(prior.probabilities[i] for i in indices)
    return Prior(
        realizations=tuple(prior.realizations[i] for i in indices),
        probabilities=tuple(prior.probabilities[i] / mass for i in indices),
    )


@dataclass(frozen=True)
class CostFunction:
    """Positive per-item costs; a set costs the sum of its members."""

    costs: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(c <= 0 for c in self.costs):
            raise ValueError("all item costs must be positive")

    def __getitem__(self, item: int) -> float:
        return self.costs[item]

    def __len__(self) -> int:
        return len(self.costs)

    @property
    def uniform(self) -> bool:
        return all(c == 1 for c in self.costs)

    def total(self, items: Iterable[int]) -> float:
        return sum(self.costs[e] for e in items)


@dataclass(frozen=True, eq=False)
class Instance:
    """A full problem instance: ground set, states, prior, costs, budget, utility.

    Equality is identity; structural comparison goes through the JSON form.
    The memo dict holds per-instance caches (utility values, conditioned
    supports, oracle results) keyed by string namespaces.
    """

    num_states: int
    prior: Prior
    costs: CostFunction
    budget: float
    utility: "object"
    arrival_orders: tuple[ArrivalOrder, ...] = ()
    memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        n = len(self.costs)
        if n < 1:
            raise ValueError("instance needs at least one item")
        if self.num_states < 1:
            raise ValueError("instance needs at least one state")
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if not any(c <= self.budget for c in self.costs.costs):
            raise ValueError("no item is individually affordable within the budget")
        for phi in self.prior.realizations:
            if len(phi) != n:
                raise ValueError("every support realization must assign all items")
            if any(not (0 <= s < self.num_states) for s in phi):
                raise ValueError("realization state outside the state alphabet")
        for order in self.arrival_orders:
            validate_order(order, n)
        validator = getattr(self.utility, "validate", None)
        if validator is not None:
            validator(self)

    @property
    def num_items(self) -> int:
        return len(self.costs)

    @property
    def items(self) -> range:
        return range(self.num_items)

    def cache(self, namespace: str) -> dict:
        return self.memo.setdefault(namespace, {})


def validate_order(order: Sequence[int], num_items: int) -> None:
    if sorted(order) != list(range(num_items)):
        raise ValueError(f"arrival order {order!r} is not a permutation of 0..{num_items - 1}")


def enumerate_reachable_partials(
    instance: Instance,
    budget_cap: float,
    max_partials: int = DEFAULT_PARTIAL_CAP,
) -> list[PartialRealization]:
    """All positive-mass partial realizations whose domain costs at most budget_cap.

    Deterministic order: lexicographic by sorted domain, then by observed states.
    """
    results: list[PartialRealization] = []
    count = 0
    for size in range(instance.num_items + 1):
        for domain in itertools.combinations(instance.items, size):
            if instance.costs.total(domain) > budget_cap:
                continue
            assignments = sorted(
                {tuple(phi[e] for e in domain) for phi in instance.prior.realizations}
            )
            count += len(assignments)
            if count > max_partials:
                raise StateSpaceTooLarge(
                    f"more than {max_partials} reachable partial realizations"
                )
            for states in assignments:
                results.append(
                    PartialRealization(tuple(zip(domain, states)))
                )
    results.sort(key=PartialRealization.sort_key)
    return results
