import pytest

from naive import naive_marginal
from streamsubmod.errors import UnknownRealization
from streamsubmod.model import CostFunction, Instance, PartialRealization, Prior
from streamsubmod.policies import PoolPolicySpec
from streamsubmod.utility import (
    CoverageUtility,
    TableUtility,
    VersionSpaceUtility,
    marginal_item,
    marginal_policy,
    utility_value,
)


def psi(*pairs):
    return PartialRealization.from_pairs(pairs)


def coverage_abc_instance():
    # item0 covers {a, b} (elements 0, 1) in state 1 and nothing in state 0.
    return Instance(
        num_states=2,
        prior=Prior(((0,), (1,)), (0.5, 0.5)),
        costs=CostFunction((1.0,)),
        budget=1.0,
        utility=CoverageUtility(3, ((frozenset(), frozenset({0, 1})),)),
    )


def bernoulli_table_instance(p_one=0.3):
    # One item worth 1 exactly in state 1.
    values = {
        ((), 0): 0.0,
        ((), 1): 0.0,
        ((0,), 0): 0.0,
        ((0,), 1): 1.0,
    }
    return Instance(
        num_states=2,
        prior=Prior(((0,), (1,)), (1 - p_one, p_one)),
        costs=CostFunction((1.0,)),
        budget=1.0,
        utility=TableUtility(values),
    )


def modular_instance():
    # f(S, phi) = sum of fixed per-item weights; states are irrelevant.
    weights = (0.5, 1.25, 2.0)
    values = {}
    import itertools

    for r in range(4):
        for subset in itertools.combinations(range(3), r):
            for idx in range(2):
                values[(subset, idx)] = sum(weights[e] for e in subset)
    return Instance(
        num_states=2,
        prior=Prior(((0, 0, 0), (1, 1, 1)), (0.5, 0.5)),
        costs=CostFunction((1.0, 1.0, 1.0)),
        budget=3.0,
        utility=TableUtility(values),
    )


class TestUtilityValue:
    def test_coverage_empty_set_is_zero(self, canonical_uniform):
        for phi, _ in canonical_uniform.prior.support():
            assert utility_value(canonical_uniform, [], phi) == 0.0

    def test_coverage_counts_covered_elements(self):
        instance = coverage_abc_instance()
        assert utility_value(instance, [0], (1,)) == 2.0
        assert utility_value(instance, [0], (0,)) == 0.0

    def test_versionspace_full_identification_scores_one(self):
        instance = Instance(
            num_states=2,
            prior=Prior(((0, 0), (0, 1), (1, 0)), (0.5, 0.25, 0.25)),
            costs=CostFunction((1.0, 1.0)),
            budget=2.0,
            utility=VersionSpaceUtility(),
        )
        # Observing both items distinguishes every hypothesis pair.
        for phi, _ in instance.prior.support():
            assert utility_value(instance, [0, 1], phi) == pytest.approx(1.0)
            assert utility_value(instance, [], phi) == 0.0

    def test_table_rejects_unknown_realization(self):
        instance = bernoulli_table_instance()
        with pytest.raises(UnknownRealization):
            instance.utility.value(instance, (0,), (2,))

    def test_viral_one_hop(self, canonical_uniform):
        del canonical_uniform
        from streamsubmod.utility import ViralUtility

        instance = Instance(
            num_states=4,
            prior=Prior(((3, 0),), (1.0,)),
            costs=CostFunction((1.0, 1.0)),
            budget=2.0,
            utility=ViralUtility(4, ((1, 2), (3,))),
        )
        # item0 in state 3 has both out-edges live: influences {0, 1, 2}.
        assert utility_value(instance, [0], (3, 0)) == 3.0
        # item1 in state 0 has no live edge: influences itself only.
        assert utility_value(instance, [1], (3, 0)) == 1.0
        assert utility_value(instance, [0, 1], (3, 0)) == 3.0


class TestMarginalItem:
    def test_observed_item_has_zero_marginal(self, canonical_uniform):
        assert marginal_item(canonical_uniform, 0, psi((0, 1))) == 0.0

    def test_single_item_bernoulli(self):
        instance = bernoulli_table_instance(p_one=0.3)
        assert marginal_item(instance, 0, psi()) == pytest.approx(0.3, abs=1e-12)

    def test_matches_naive_double_loop(self, canonical_uniform):
        for item in canonical_uniform.items:
            for observed in ((), ((1, 0),), ((1, 1),), ((0, 1), (2, 0))):
                if any(i == item for i, _ in observed):
                    continue
                expected = naive_marginal(canonical_uniform, item, dict(observed))
                got = marginal_item(canonical_uniform, item, psi(*observed))
                assert got == pytest.approx(expected, abs=1e-12)

    def test_modular_marginal_independent_of_observations(self):
        instance = modular_instance()
        base = marginal_item(instance, 2, psi())
        assert base == pytest.approx(2.0, abs=1e-12)
        assert marginal_item(instance, 2, psi((0, 0))) == pytest.approx(base, abs=1e-9)
        assert marginal_item(instance, 2, psi((0, 0), (1, 0))) == pytest.approx(
            base, abs=1e-9
        )


class TestMarginalPolicy:
    def test_empty_policy_at_empty_observation(self, canonical_uniform):
        assert marginal_policy(canonical_uniform, PoolPolicySpec("empty"), psi()) == 0.0

    def test_single_step_policy_equals_item_marginal(self, canonical_uniform):
        for item in canonical_uniform.items:
            spec = PoolPolicySpec("fixed_single_step", item=item)
            assert marginal_policy(canonical_uniform, spec, psi()) == pytest.approx(
                marginal_item(canonical_uniform, item, psi()), abs=1e-12
            )

    def test_oracle_policy_gain_bounded_by_optimum(self, canonical_uniform):
        from streamsubmod.evaluation import optimal_pool_value

        optimum = optimal_pool_value(canonical_uniform)
        spec = PoolPolicySpec("oracle")
        for observed in (((0, 1),), ((1, 0),), ((2, 1),)):
            gain = marginal_policy(canonical_uniform, spec, psi(*observed))
            assert gain <= optimum + 1e-9
