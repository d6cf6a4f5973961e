"""Property-checker behavior: built-in families pass, counterexamples fail
exactly their named property, witnesses re-verify, and the implication
between the restricted and unrestricted diminishing-returns notions holds.
"""

import itertools

import pytest

from streamsubmod.instances import GeneratorSpec, counterexample_table, generate
from streamsubmod.model import EPSILON, PartialRealization
from streamsubmod.policies import oracle_optimal_pool
from streamsubmod.utility import (
    check_adaptive_monotone,
    check_adaptive_submodular,
    check_policywise,
    check_semi_policywise,
    expected_empty_value,
    marginal_item,
    run_all_checkers,
)

PROPERTIES = ("adaptive_monotone", "adaptive_submodular", "semi_policywise", "policywise")


class TestBuiltinFamiliesPass:
    def test_canonical_instances(self, canonical_uniform, canonical_knapsack):
        for instance in (canonical_uniform, canonical_knapsack):
            reports = run_all_checkers(instance)
            assert all(r.holds for r in reports.values())

    @pytest.mark.parametrize("family", ["coverage", "viral", "versionspace"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_generated_families(self, family, seed):
        instance = generate(GeneratorSpec(family=family, num_items=3, budget=2.0, seed=seed))
        reports = run_all_checkers(instance)
        failing = [name for name, r in reports.items() if not r.holds]
        assert not failing

    def test_modular_table_has_equality_margins(self):
        from streamsubmod.model import CostFunction, Instance, Prior
        from streamsubmod.utility import TableUtility

        weights = (1.0, 2.0)
        values = {}
        for r in range(3):
            for subset in itertools.combinations(range(2), r):
                for idx in range(2):
                    values[(subset, idx)] = sum(weights[e] for e in subset)
        instance = Instance(
            num_states=2,
            prior=Prior(((0, 0), (1, 1)), (0.5, 0.5)),
            costs=CostFunction((1.0, 1.0)),
            budget=2.0,
            utility=TableUtility(values),
        )
        assert check_adaptive_submodular(instance).holds
        assert check_adaptive_monotone(instance).holds


class TestCounterexamplesFailExactly:
    @pytest.mark.parametrize("target", PROPERTIES)
    def test_exactly_named_checker_fails(self, target):
        instance = counterexample_table(target)
        reports = run_all_checkers(instance)
        for name, report in reports.items():
            assert report.holds == (name != target), (name, report.holds)

    def test_adaptive_submodular_witness_reverifies(self):
        instance = counterexample_table("adaptive_submodular")
        witness = check_adaptive_submodular(instance).witness
        early = marginal_item(instance, witness.item, witness.psi)
        late = marginal_item(instance, witness.item, witness.psi_prime)
        assert early < late - EPSILON
        assert witness.margin > EPSILON

    def test_adaptive_monotone_witness_reverifies(self):
        instance = counterexample_table("adaptive_monotone")
        witness = check_adaptive_monotone(instance).witness
        assert marginal_item(instance, witness.item, witness.psi) < -EPSILON

    def test_semi_policywise_witness_reverifies(self):
        instance = counterexample_table("semi_policywise")
        witness = check_semi_policywise(instance).witness
        optimum = oracle_optimal_pool(instance).delta + expected_empty_value(instance)
        conditional = oracle_optimal_pool(instance, witness.psi).delta
        assert optimum < conditional - EPSILON
        assert witness.lhs == pytest.approx(optimum, abs=1e-12)
        assert witness.rhs == pytest.approx(conditional, abs=1e-12)

    def test_policywise_witness_reverifies(self):
        instance = counterexample_table("policywise")
        witness = check_policywise(instance).witness
        residual = instance.budget - instance.costs.total(witness.psi.domain)
        before = oracle_optimal_pool(
            instance, witness.psi_prime, budget=residual, pool=witness.subset
        ).delta
        after = oracle_optimal_pool(
            instance, witness.psi, budget=residual, pool=witness.subset
        ).delta
        assert before < after - EPSILON


def lemma_premise_holds(instance) -> bool:
    """Restricted diminishing returns at every grown budget, per the lemma.

    For each reachable observation set psi, compare the best gain restricted
    to the unobserved pool at the instance budget, conditioned on nothing
    versus conditioned on psi. This is the exact premise under which the
    unconditioned optimum must dominate every conditional gain.
    """
    from streamsubmod.model import enumerate_reachable_partials

    total_cost = instance.costs.total(instance.items)
    for psi in enumerate_reachable_partials(instance, total_cost):
        pool = tuple(e for e in instance.items if psi.state_of(e) is None)
        before = oracle_optimal_pool(
            instance, PartialRealization(), budget=instance.budget, pool=pool
        ).delta
        after = oracle_optimal_pool(
            instance, psi, budget=instance.budget, pool=pool
        ).delta
        if before < after - EPSILON:
            return False
    return True


class TestPolicywiseImpliesSemiPolicywise:
    """Restricted monotone-gain stability at all grown budgets, together with
    adaptive monotonicity, forces the semi-policywise property."""

    def instances(self):
        yield counterexample_table("adaptive_submodular")
        yield counterexample_table("adaptive_monotone")
        yield counterexample_table("semi_policywise")
        yield counterexample_table("policywise")
        for family in ("coverage", "viral", "versionspace"):
            for seed in (0, 1):
                yield generate(
                    GeneratorSpec(family=family, num_items=3, budget=2.0, seed=seed)
                )
                yield generate(
                    GeneratorSpec(
                        family=family,
                        num_items=3,
                        budget=2.0,
                        cost_profile="random",
                        seed=seed,
                    )
                )

    def test_implication(self):
        checked = 0
        for instance in self.instances():
            premise = (
                check_policywise(instance, subset_mode="exhaustive").holds
                and lemma_premise_holds(instance)
                and check_adaptive_monotone(instance).holds
            )
            if premise:
                assert check_semi_policywise(instance).holds
                checked += 1
        assert checked > 0

    def test_semi_policywise_counterexample_fails_premise(self):
        # The fixture passes the instance-budget checker but not the
        # grown-budget premise, which is exactly how it evades the lemma.
        instance = counterexample_table("semi_policywise")
        assert check_policywise(instance, subset_mode="exhaustive").holds
        assert not lemma_premise_holds(instance)


class TestCheckerDeterminism:
    def test_same_witness_every_run(self):
        instance = counterexample_table("policywise")
        first = check_policywise(instance)
        second = check_policywise(instance)
        assert first.witness == second.witness
        assert first.pairs_checked == second.pairs_checked


class TestSemiPolicywiseTightAtEmptyObservation:
    def test_unconditioned_policy_gain_equals_optimum(self, canonical_uniform):
        # With nothing observed the best conditional gain is the optimal
        # pool value itself, so the dominating inequality is tight.
        from streamsubmod.evaluation import optimal_pool_value

        unconditioned = (
            oracle_optimal_pool(canonical_uniform, PartialRealization()).delta
            + expected_empty_value(canonical_uniform)
        )
        assert unconditioned == pytest.approx(
            optimal_pool_value(canonical_uniform), abs=1e-12
        )
