import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from streamsubmod import acceptance_knapsack_instance, acceptance_uniform_instance
from streamsubmod.instances import GeneratorSpec, generate


@pytest.fixture
def canonical_uniform():
    return acceptance_uniform_instance()


@pytest.fixture
def canonical_knapsack():
    return acceptance_knapsack_instance()


def uniform_suite():
    """Seeded generated instances for the unit-cost acceptance criteria."""
    specs = []
    for seed in range(18):
        specs.append(GeneratorSpec(family="coverage", num_items=3, budget=2.0, seed=seed))
    for seed in range(100, 108):
        specs.append(GeneratorSpec(family="viral", num_items=3, budget=2.0, seed=seed))
    for seed in range(108, 116):
        specs.append(GeneratorSpec(family="viral", num_items=4, budget=2.0, seed=seed))
    for seed in range(200, 208):
        specs.append(GeneratorSpec(family="versionspace", num_items=3, budget=2.0, seed=seed))
    for seed in range(208, 216):
        specs.append(
            GeneratorSpec(family="versionspace", num_items=4, num_hypotheses=8, budget=3.0, seed=seed)
        )
    return [(spec, generate(spec)) for spec in specs]


def knapsack_suite():
    """Seeded generated instances for the knapsack acceptance criteria."""
    specs = []
    for seed in range(18):
        specs.append(
            GeneratorSpec(family="coverage", num_items=3, budget=2.0, cost_profile="random", seed=seed)
        )
    for seed in range(100, 116):
        specs.append(
            GeneratorSpec(family="viral", num_items=3, budget=2.0, cost_profile="random", seed=seed)
        )
    for seed in range(200, 216):
        specs.append(
            GeneratorSpec(
                family="versionspace", num_items=3, budget=2.0, cost_profile="random", seed=seed
            )
        )
    return [(spec, generate(spec)) for spec in specs]
