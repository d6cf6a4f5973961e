"""Stream-based adaptive submodular maximization at desk scale.

Threshold stream policies for uniform and knapsack budgets, their offline
value estimators, an exact optimal pool-policy oracle, structural property
checkers, and exact/adversarial/Monte Carlo evaluation.
"""

from .errors import (
    CapExceeded,
    InvalidAlphaBeta,
    NonUniformCost,
    ProbabilityNotNormalized,
    SchemaError,
    StateSpaceTooLarge,
    StreamSubmodError,
    TooManyOrders,
    UnknownRealization,
    ZeroProbabilityObservation,
)
from .model import (
    EPSILON,
    CostFunction,
    Instance,
    PartialRealization,
    Prior,
    conditional_distribution,
    consistent,
    enumerate_reachable_partials,
)
from .utility import (
    CoverageUtility,
    PropertyReport,
    PropertyWitness,
    TableUtility,
    VersionSpaceUtility,
    ViralUtility,
    check_adaptive_monotone,
    check_adaptive_submodular,
    check_policywise,
    check_semi_policywise,
    marginal_item,
    marginal_policy,
    run_all_checkers,
    utility_value,
)
from .policies import (
    OracleNode,
    OracleResult,
    PolicyTrace,
    PoolPolicySpec,
    SelectionStep,
    StreamPolicySpec,
    best_singleton,
    oracle_optimal_pool,
    run_mixed_singleton,
    run_pool_density_greedy,
    run_pool_greedy,
    run_stream_policy,
    run_threshold_knapsack,
    run_threshold_knapsack_plus,
    run_threshold_uniform,
    simulate_pool_trace,
)
from .evaluation import (
    EvaluationReport,
    Guarantee,
    Proposition1Report,
    VEstimate,
    estimate_v,
    evaluate_policy,
    expected_utility_exact,
    expected_utility_monte_carlo,
    expected_utility_pool,
    optimal_pool_value,
    verify_proposition1,
    worst_case_order,
)
from .instances import (
    GeneratorSpec,
    acceptance_knapsack_instance,
    acceptance_uniform_instance,
    counterexample_table,
    generate,
    instance_hash,
    load,
    save,
)

__all__ = [name for name in dir() if not name.startswith("_")]
