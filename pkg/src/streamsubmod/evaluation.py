"""Exact, adversarial, and Monte Carlo evaluation of policies, plus reports.

The central quantity is the expected utility of a policy under one arrival
order, taken exactly over the prior support. The adversary picks the order
minimizing that value; exhaustive search over all permutations certifies
the minimum for small ground sets, seeded sampling gives a labeled
lower-confidence surrogate beyond the cap.

``estimate_v`` produces the offline threshold numerator together with the
certified multiplicative window (alpha, beta) around the optimal pool
value, which in turn fixes the theoretical guarantee attached to a report:

* threshold_uniform:  min(alpha / 4, (2 - beta) / 4)
* mixed_singleton:    min(alpha / 8, (2 - beta) / 8)
* pool_greedy:        1 - 1/e
* oracle:             1
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidAlphaBeta, NonUniformCost, TooManyOrders
from .model import ArrivalOrder, EPSILON, Instance, validate_order
from .policies import (
    POOL_ALGORITHMS,
    STREAM_ALGORITHMS,
    PolicyTrace,
    PoolPolicySpec,
    StreamPolicySpec,
    best_singleton,
    oracle_optimal_pool,
    run_stream_policy,
    simulate_pool_trace,
)
from .utility import expected_empty_value

DEFAULT_ORDER_CAP = 8


def optimal_pool_value(instance: Instance) -> float:
    """Expected utility of the optimal pool policy."""
    return oracle_optimal_pool(instance).delta + expected_empty_value(instance)


def _mixed_branch_values(
    instance: Instance, spec: StreamPolicySpec, order: Sequence[int]
) -> list[float]:
    """Per-realization analytic value of the fair singleton/knapsack mix.

    The coin is integrated out exactly instead of sampled: each realization
    contributes the average of its two branch values.
    """
    item, _ = best_singleton(instance)
    singleton_spec = PoolPolicySpec("fixed_single_step", item=item)
    values = []
    for phi in instance.prior.realizations:
        single = simulate_pool_trace(instance, singleton_spec, phi).final_value
        scan = run_stream_policy(
            instance,
            StreamPolicySpec("threshold_knapsack", spec.v, spec.v_provenance, spec.seed),
            order,
            phi,
        ).final_value
        values.append(0.5 * (single + scan))
    return values


def per_realization_values(
    instance: Instance,
    spec: StreamPolicySpec | PoolPolicySpec,
    order: Sequence[int] | None,
) -> list[float]:
    """Final utility of the policy on each support realization, in support order."""
    if isinstance(spec, PoolPolicySpec):
        return [
            simulate_pool_trace(instance, spec, phi).final_value
            for phi in instance.prior.realizations
        ]
    if order is None:
        raise ValueError("stream policies need an arrival order")
    if spec.algorithm == "mixed_singleton":
        return _mixed_branch_values(instance, spec, order)
    return [
        run_stream_policy(instance, spec, order, phi).final_value
        for phi in instance.prior.realizations
    ]


def expected_utility_exact(
    instance: Instance,
    spec: StreamPolicySpec | PoolPolicySpec,
    order: Sequence[int] | None,
) -> float:
    """Exact expected utility under one arrival order (ignored by pool policies)."""
    if order is not None:
        validate_order(order, instance.num_items)
    values = per_realization_values(instance, spec, order)
    return sum(p * v for p, v in zip(instance.prior.probabilities, values))


def expected_utility_pool(instance: Instance, spec: PoolPolicySpec) -> float:
    """Order-independent expected utility of a pool policy."""
    if spec.algorithm == "oracle":
        return optimal_pool_value(instance)
    return expected_utility_exact(instance, spec, None)


def all_orders(instance: Instance, order_cap: int = DEFAULT_ORDER_CAP) -> list[ArrivalOrder]:
    if instance.num_items > order_cap:
        raise TooManyOrders(
            f"n = {instance.num_items} exceeds the exhaustive order cap {order_cap}"
        )
    return [tuple(p) for p in itertools.permutations(instance.items)]


def evaluate_orders(
    instance: Instance,
    spec: StreamPolicySpec | PoolPolicySpec,
    orders: Sequence[ArrivalOrder],
    threads: int = 1,
) -> list[float]:
    """Expected utility per order; parallel evaluation keeps submission order."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(expected_utility_exact, instance, spec, order)
                for order in orders
            ]
            return [f.result() for f in futures]
    return [expected_utility_exact(instance, spec, order) for order in orders]


def sampled_orders(instance: Instance, samples: int, seed: int) -> list[ArrivalOrder]:
    rng = random.Random(seed)
    items = list(instance.items)
    return [tuple(rng.sample(items, len(items))) for _ in range(samples)]


def worst_case_order(
    instance: Instance,
    spec: StreamPolicySpec | PoolPolicySpec,
    strategy: str = "exhaustive",
    samples: int = 16,
    seed: int = 0,
    order_cap: int = DEFAULT_ORDER_CAP,
    threads: int = 1,
) -> tuple[ArrivalOrder, float]:
    """Minimizing arrival order and its value; exhaustive search is exact."""
    if strategy == "exhaustive":
        orders = all_orders(instance, order_cap)
    elif strategy == "sampled":
        orders = sampled_orders(instance, samples, seed)
    else:
        raise ValueError(f"unknown adversary strategy {strategy!r}")
    values = evaluate_orders(instance, spec, orders, threads)
    worst_index = min(range(len(orders)), key=lambda i: (values[i], i))
    return orders[worst_index], values[worst_index]


@dataclass(frozen=True)
class VEstimate:
    """Threshold numerator with its certified window around the optimum."""

    value: float
    alpha: float
    beta: float
    mode: str

    def validate(self) -> "VEstimate":
        if not (0.0 <= self.alpha <= 1.0) or not (1.0 <= self.beta <= 2.0):
            raise InvalidAlphaBeta(
                f"alpha must lie in [0, 1] and beta in [1, 2], got ({self.alpha}, {self.beta})"
            )
        return self


def estimate_v(
    instance: Instance,
    mode: str,
    manual_value: float | None = None,
    alpha: float | None = None,
    beta: float | None = None,
) -> VEstimate:
    """Offline estimate of the optimal pool value with certified (alpha, beta).

    greedy:         value of B rounds of adaptive greedy; window (1 - 1/e, 1).
                    Unit costs only.
    density_greedy: better of density greedy and the best singleton;
                    window ((1 - 1/e) / 2, 1).
    exact:          the oracle value itself; window (1, 1).
    manual:         caller-supplied value; window defaults to the vacuous
                    (0, 2) unless the caller certifies tighter bounds.
    """
    if mode == "greedy":
        if not instance.costs.uniform:
            raise NonUniformCost("greedy v estimation requires uniform costs")
        value = expected_utility_pool(instance, PoolPolicySpec("pool_greedy"))
        return VEstimate(value, 1.0 - 1.0 / math.e, 1.0, mode).validate()
    if mode == "density_greedy":
        greedy_value = expected_utility_pool(instance, PoolPolicySpec("pool_density_greedy"))
        _, singleton_value = best_singleton(instance)
        return VEstimate(
            max(greedy_value, singleton_value), (1.0 - 1.0 / math.e) / 2.0, 1.0, mode
        ).validate()
    if mode == "exact":
        return VEstimate(optimal_pool_value(instance), 1.0, 1.0, mode).validate()
    if mode == "manual":
        if manual_value is None:
            raise ValueError("manual mode needs a value for v")
        return VEstimate(
            manual_value,
            0.0 if alpha is None else alpha,
            2.0 if beta is None else beta,
            mode,
        ).validate()
    raise ValueError(f"unknown v mode {mode!r}")


@dataclass(frozen=True)
class Guarantee:
    """A proven lower bound on worst-case value as a fraction of the optimum."""

    value: float
    formula: str


def guarantee_for(algorithm: str, estimate: VEstimate) -> Guarantee | None:
    if algorithm == "threshold_uniform":
        return Guarantee(
            min(estimate.alpha / 4.0, (2.0 - estimate.beta) / 4.0),
            "min(alpha/4, (2-beta)/4)",
        )
    if algorithm == "mixed_singleton":
        return Guarantee(
            min(estimate.alpha / 8.0, (2.0 - estimate.beta) / 8.0),
            "min(alpha/8, (2-beta)/8)",
        )
    if algorithm == "pool_greedy":
        return Guarantee(1.0 - 1.0 / math.e, "1 - 1/e")
    if algorithm == "oracle":
        return Guarantee(1.0, "1")
    return None


def expected_utility_monte_carlo(
    instance: Instance,
    spec: StreamPolicySpec | PoolPolicySpec,
    order: Sequence[int] | None,
    samples: int,
    seed: int,
) -> tuple[float, float]:
    """Mean and standard error over i.i.d. realization draws from the prior.

    Policy runs stay exact per realization (marginals condition on the full
    prior), so draws reduce to sampling support indices against the
    precomputed per-realization values.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    values = per_realization_values(instance, spec, order)
    rng = random.Random(seed)
    draws = rng.choices(range(len(values)), weights=instance.prior.probabilities, k=samples)
    total = 0.0
    total_sq = 0.0
    for idx in draws:
        v = values[idx]
        total += v
        total_sq += v * v
    mean = total / samples
    if samples == 1:
        return mean, 0.0
    variance = max(0.0, (total_sq - samples * mean * mean) / (samples - 1))
    return mean, math.sqrt(variance / samples)


@dataclass(frozen=True)
class Proposition1Report:
    """Per-order comparison of the overshooting scan against two upper bounds.

    ``holds`` tracks the stated bound max(best singleton, scan value). That
    bound is not implied by adaptive monotonicity, adaptive submodularity,
    and semi-policywise submodularity: instances passing every checker can
    violate it whenever the scan already matches the singleton and the
    overshoot item adds real value. ``sum_form_holds`` tracks the weaker
    bound best singleton + scan value, which does follow from diminishing
    returns (the overshoot item's conditional gain never exceeds the best
    singleton), and which every checker-passing instance must satisfy.
    """

    holds: bool
    sum_form_holds: bool
    tightest_margin: float
    sum_tightest_margin: float
    per_order: tuple[tuple[ArrivalOrder, float, float, float], ...]

    def to_json_dict(self) -> dict:
        return {
            "holds": self.holds,
            "sum_form_holds": self.sum_form_holds,
            "tightest_margin": self.tightest_margin,
            "sum_tightest_margin": self.sum_tightest_margin,
            "per_order": [
                {
                    "order": list(order),
                    "overshoot_value": over,
                    "max_bound": bound,
                    "sum_bound": sum_bound,
                }
                for order, over, bound, sum_bound in self.per_order
            ],
        }


def verify_proposition1(
    instance: Instance,
    estimate: VEstimate,
    order_cap: int = DEFAULT_ORDER_CAP,
) -> Proposition1Report:
    """Compare the overshooting scan against its singleton-based upper bounds."""
    _, singleton_value = best_singleton(instance)
    plus_spec = StreamPolicySpec("threshold_knapsack_plus", estimate.value, estimate.mode)
    base_spec = StreamPolicySpec("threshold_knapsack", estimate.value, estimate.mode)
    rows = []
    holds = True
    sum_holds = True
    tightest = float("inf")
    sum_tightest = float("inf")
    for order in all_orders(instance, order_cap):
        over = expected_utility_exact(instance, plus_spec, order)
        base = expected_utility_exact(instance, base_spec, order)
        bound = max(singleton_value, base)
        sum_bound = singleton_value + base
        tightest = min(tightest, bound - over)
        sum_tightest = min(sum_tightest, sum_bound - over)
        if over > bound + EPSILON:
            holds = False
        if over > sum_bound + EPSILON:
            sum_holds = False
        rows.append((order, over, bound, sum_bound))
    return Proposition1Report(holds, sum_holds, tightest, sum_tightest, tuple(rows))


@dataclass(frozen=True)
class EvaluationReport:
    """Everything a policy evaluation produced, ready for JSON or CSV."""

    policy: dict
    instance_hash: str
    v_used: float | None
    v_mode: str | None
    alpha: float | None
    beta: float | None
    per_order: tuple[tuple[ArrivalOrder, float], ...]
    worst_order: ArrivalOrder
    worst_value: float
    oracle_value: float
    ratio: float | None
    guarantee: Guarantee | None
    mode: dict
    order_strategy: str

    def to_json_dict(self) -> dict:
        return {
            "policy": self.policy,
            "instance_hash": self.instance_hash,
            "v": None
            if self.v_used is None
            else {
                "value": self.v_used,
                "mode": self.v_mode,
                "alpha": self.alpha,
                "beta": self.beta,
            },
            "per_order": [
                {"order": list(order), "value": value} for order, value in self.per_order
            ],
            "worst_order": list(self.worst_order),
            "worst_value": self.worst_value,
            "oracle_value": self.oracle_value,
            "ratio": self.ratio,
            "guarantee": None
            if self.guarantee is None
            else {"value": self.guarantee.value, "formula": self.guarantee.formula},
            "mode": self.mode,
            "order_strategy": self.order_strategy,
        }

    def to_json_bytes(self) -> bytes:
        return (
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"
        ).encode("utf-8")

    def to_csv_text(self) -> str:
        # Fixed column order: row kind, order or tag, value.
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["row", "order", "value"])
        for order, value in self.per_order:
            writer.writerow(["order", " ".join(map(str, order)), repr(value)])
        writer.writerow(["worst", " ".join(map(str, self.worst_order)), repr(self.worst_value)])
        writer.writerow(["oracle", "", repr(self.oracle_value)])
        writer.writerow(["ratio", "", "" if self.ratio is None else repr(self.ratio)])
        writer.writerow(
            [
                "guarantee",
                "" if self.guarantee is None else self.guarantee.formula,
                "" if self.guarantee is None else repr(self.guarantee.value),
            ]
        )
        writer.writerow(["v", self.v_mode or "", "" if self.v_used is None else repr(self.v_used)])
        writer.writerow(["alpha", "", "" if self.alpha is None else repr(self.alpha)])
        writer.writerow(["beta", "", "" if self.beta is None else repr(self.beta)])
        writer.writerow(["mode", json.dumps(self.mode, sort_keys=True), ""])
        return buffer.getvalue()


def build_policy_spec(
    algorithm: str,
    estimate: VEstimate | None,
    seed: int | None = None,
    item: int | None = None,
) -> StreamPolicySpec | PoolPolicySpec:
    if algorithm in STREAM_ALGORITHMS:
        if estimate is None:
            raise ValueError(f"{algorithm} needs a threshold estimate v")
        return StreamPolicySpec(algorithm, estimate.value, estimate.mode, seed)
    if algorithm in POOL_ALGORITHMS:
        return PoolPolicySpec(algorithm, item=item)
    raise ValueError(f"unknown policy algorithm {algorithm!r}")


def evaluate_policy(
    instance: Instance,
    algorithm: str,
    instance_hash: str,
    v_mode: str | None = None,
    manual_v: float | None = None,
    alpha: float | None = None,
    beta: float | None = None,
    seed: int | None = 0,
    orders: Sequence[ArrivalOrder] | None = None,
    order_strategy: str = "all",
    order_samples: int = 16,
    mc_samples: int | None = None,
    order_cap: int = DEFAULT_ORDER_CAP,
    threads: int = 1,
) -> EvaluationReport:
    """End-to-end pipeline: estimate v, evaluate per order, attach guarantees."""
    estimate: VEstimate | None = None
    if algorithm in STREAM_ALGORITHMS:
        mode = v_mode or ("greedy" if instance.costs.uniform else "density_greedy")
        estimate = estimate_v(instance, mode, manual_v, alpha, beta)
    spec = build_policy_spec(algorithm, estimate, seed=seed)

    if orders is not None:
        chosen = [tuple(o) for o in orders]
        strategy_label = order_strategy
    elif order_strategy == "all":
        chosen = all_orders(instance, order_cap)
        strategy_label = "all"
    elif order_strategy == "worst-sampled":
        chosen = sampled_orders(instance, order_samples, seed or 0)
        strategy_label = f"worst-sampled:{order_samples}"
    elif order_strategy == "random":
        chosen = sampled_orders(instance, 1, seed or 0)
        strategy_label = "random"
    else:
        raise ValueError(f"unknown order strategy {order_strategy!r}")

    if mc_samples is None:
        values = evaluate_orders(instance, spec, chosen, threads)
        mode_payload: dict = {"kind": "exact"}
    else:
        values = []
        errors = []
        for order in chosen:
            mean, err = expected_utility_monte_carlo(
                instance, spec, order, mc_samples, seed or 0
            )
            values.append(mean)
            errors.append(err)
        mode_payload = {
            "kind": "monte_carlo",
            "samples": mc_samples,
            "seed": seed or 0,
            "std_error": max(errors) if errors else 0.0,
        }

    worst_index = min(range(len(chosen)), key=lambda i: (values[i], i))
    oracle_value = optimal_pool_value(instance)
    worst_value = values[worst_index]
    ratio = None if oracle_value <= 0 else worst_value / oracle_value
    guarantee = None
    if estimate is not None or algorithm in ("pool_greedy", "oracle"):
        guarantee = guarantee_for(
            algorithm, estimate or VEstimate(0.0, 0.0, 2.0, "manual")
        )

    policy_payload: dict = {"algorithm": algorithm}
    if estimate is not None:
        policy_payload["v"] = estimate.value
        policy_payload["v_mode"] = estimate.mode
    if seed is not None and algorithm == "mixed_singleton":
        policy_payload["seed"] = seed

    return EvaluationReport(
        policy=policy_payload,
        instance_hash=instance_hash,
        v_used=None if estimate is None else estimate.value,
        v_mode=None if estimate is None else estimate.mode,
        alpha=None if estimate is None else estimate.alpha,
        beta=None if estimate is None else estimate.beta,
        per_order=tuple(zip(chosen, values)),
        worst_order=chosen[worst_index],
        worst_value=worst_value,
        oracle_value=oracle_value,
        ratio=ratio,
        guarantee=guarantee,
        mode=mode_payload,
        order_strategy=strategy_label,
    )
