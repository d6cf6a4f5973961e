"""Command-line front end: generate instances, run policies, verify, report.

Subcommands
-----------
generate   build an instance from a family generator and write its JSON
run        estimate v, evaluate a policy over arrival orders, write a report
verify     run the property checkers and the bound assertions for an instance
oracle     print the offline quantities and their implied estimation windows
bench      time the oracle and exhaustive-order evaluation against n

Exit codes: 0 success, 1 failed verification check, 2 configuration error,
3 cap exceeded, 4 model error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

from .errors import (
    CapExceeded,
    InvalidAlphaBeta,
    NonUniformCost,
    ProbabilityNotNormalized,
    SchemaError,
    StateSpaceTooLarge,
    TooManyOrders,
    UnknownRealization,
    ZeroProbabilityObservation,
)
from .evaluation import (
    DEFAULT_ORDER_CAP,
    all_orders,
    estimate_v,
    evaluate_policy,
    expected_utility_exact,
    expected_utility_pool,
    optimal_pool_value,
    verify_proposition1,
)
from .instances import (
    FAMILIES,
    GeneratorSpec,
    generate,
    instance_hash,
    instance_to_json_dict,
    load,
    save,
)
from .model import EPSILON, Instance
from .policies import POOL_ALGORITHMS, STREAM_ALGORITHMS, PoolPolicySpec, StreamPolicySpec, best_singleton
from .utility import run_all_checkers

CONFIG_EXIT = 2
CAP_EXIT = 3
MODEL_EXIT = 4

CAP_ERRORS = (StateSpaceTooLarge, TooManyOrders, CapExceeded)
CONFIG_ERRORS = (SchemaError, ProbabilityNotNormalized, InvalidAlphaBeta)
MODEL_ERRORS = (ZeroProbabilityObservation, NonUniformCost, UnknownRealization)


class ConfigError(Exception):
    pass


def _add_instance_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", help="path to an instance JSON file")
    parser.add_argument("--generate", choices=FAMILIES, dest="family", help="generator family")
    parser.add_argument("--n", type=int, default=3, help="ground set size for --generate")
    parser.add_argument("--states", type=int, default=2, help="state alphabet size for --generate")
    parser.add_argument("--budget", type=float, default=2.0, help="budget for --generate")
    parser.add_argument(
        "--costs", choices=("uniform", "random"), default="uniform", help="cost profile"
    )
    parser.add_argument("--property", dest="property_name", help="table_counterexample property")
    parser.add_argument("--seed", type=int, default=0, help="generator / policy / sampling seed")
    parser.add_argument("--cap-states", type=int, default=2_000_000, help="partial enumeration cap")


def _resolve_instance(args: argparse.Namespace) -> Instance:
    if args.instance and args.family:
        raise ConfigError("--instance and --generate are mutually exclusive")
    if args.instance:
        return load(args.instance)
    if args.family:
        spec = GeneratorSpec(
            family=args.family,
            num_items=args.n,
            num_states=args.states,
            budget=args.budget,
            cost_profile=args.costs,
            seed=args.seed,
            property_name=args.property_name,
        )
        return generate(spec)
    raise ConfigError("one of --instance or --generate is required")


def _write_output(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cmd_generate(args: argparse.Namespace) -> int:
    if not args.family:
        raise ConfigError("--generate FAMILY is required for the generate command")
    args.instance = None
    instance = _resolve_instance(args)
    payload = instance_to_json_dict(instance)
    _write_output(_json_text(payload), args.out)
    return 0


def _parse_order_mode(value: str) -> tuple[str, int]:
    if value.startswith("worst-sampled:"):
        count = value.split(":", 1)[1]
        if not count.isdigit() or int(count) < 1:
            raise ConfigError("--order worst-sampled:K needs a positive integer K")
        return "worst-sampled", int(count)
    if value in ("given", "all", "random"):
        return value, 0
    raise ConfigError(f"--order must be given|all|worst-sampled:K|random, got {value!r}")


def cmd_run(args: argparse.Namespace) -> int:
    instance = _resolve_instance(args)
    mode, sample_count = _parse_order_mode(args.order)
    orders = None
    if mode == "given":
        if args.permutation:
            try:
                orders = [tuple(int(x) for x in args.permutation.split(","))]
            except ValueError as exc:
                raise ConfigError(f"--permutation must be comma-separated ints: {exc}")
        elif instance.arrival_orders:
            orders = [instance.arrival_orders[0]]
        else:
            raise ConfigError("--order given needs --permutation or instance arrival_orders")
        try:
            from .model import validate_order

            validate_order(orders[0], instance.num_items)
        except ValueError as exc:
            raise ConfigError(f"--permutation: {exc}")
    report = evaluate_policy(
        instance,
        args.policy,
        instance_hash(instance),
        v_mode=args.v_mode,
        manual_v=args.v,
        alpha=args.alpha,
        beta=args.beta,
        seed=args.seed,
        orders=orders,
        order_strategy="given" if mode == "given" else mode,
        order_samples=sample_count or 16,
        mc_samples=args.samples,
        order_cap=args.cap_orders,
        threads=args.threads,
    )
    if args.format == "json":
        _write_output(report.to_json_bytes().decode("utf-8"), args.out)
    else:
        _write_output(report.to_csv_text(), args.out)
    return 0


def _check_entry(name: str, status: str, detail: dict | None = None) -> dict:
    entry = {"check": name, "status": status}
    if detail:
        entry.update(detail)
    return entry


def cmd_verify(args: argparse.Namespace) -> int:
    instance = _resolve_instance(args)
    skip = set(args.skip or [])
    checks: list[dict] = []
    failed = False

    all_reports = run_all_checkers(instance, max_partials=args.cap_states)
    reports = {}
    for name in ("adaptive_monotone", "adaptive_submodular", "semi_policywise", "policywise"):
        if name in skip:
            checks.append(_check_entry(name, "skipped"))
            continue
        report = all_reports[name]
        reports[name] = report
        status = "pass" if report.holds else "fail"
        if not report.holds:
            failed = True
        checks.append(_check_entry(name, status, {"report": report.to_json_dict()}))

    properties_hold = all(r.holds for r in reports.values()) and len(reports) == 4

    optimum = optimal_pool_value(instance)
    uniform = instance.costs.uniform and instance.budget == int(instance.budget)

    if "proposition1" in skip:
        checks.append(_check_entry("proposition1", "skipped"))
    else:
        estimate = estimate_v(instance, "density_greedy")
        prop = verify_proposition1(instance, estimate, order_cap=args.cap_orders)
        # The stated max-form bound is reported but does not gate the exit
        # code: checker-passing instances can violate it. The sum-form bound
        # is implied by the checked properties, so its failure does gate.
        checks.append(
            _check_entry(
                "proposition1",
                "pass" if prop.holds else "fail",
                {
                    "gating": False,
                    "tightest_margin": prop.tightest_margin,
                    "v": estimate.value,
                },
            )
        )
        if not prop.sum_form_holds and properties_hold:
            failed = True
        checks.append(
            _check_entry(
                "proposition1_sum_form",
                "pass" if prop.sum_form_holds else "fail",
                {"tightest_margin": prop.sum_tightest_margin, "v": estimate.value},
            )
        )

    if "theorem_uniform" in skip:
        checks.append(_check_entry("theorem_uniform", "skipped"))
    elif not uniform:
        checks.append(
            _check_entry(
                "theorem_uniform",
                "skipped",
                {"reason": "requires unit costs and integer budget"},
            )
        )
    else:
        estimate = estimate_v(instance, "greedy")
        spec = StreamPolicySpec("threshold_uniform", estimate.value, estimate.mode)
        worst = min(
            expected_utility_exact(instance, spec, order)
            for order in all_orders(instance, args.cap_orders)
        )
        bound = min(estimate.alpha / 4.0, (2.0 - estimate.beta) / 4.0) * optimum
        ok = worst >= bound - EPSILON
        if not ok and properties_hold:
            failed = True
        checks.append(
            _check_entry(
                "theorem_uniform",
                "pass" if ok else "fail",
                {"worst_value": worst, "bound": bound, "v": estimate.value},
            )
        )

    if "theorem_knapsack" in skip:
        checks.append(_check_entry("theorem_knapsack", "skipped"))
    else:
        estimate = estimate_v(instance, "density_greedy")
        spec = StreamPolicySpec("threshold_knapsack", estimate.value, estimate.mode)
        _, singleton_value = best_singleton(instance)
        worst_mix = min(
            0.5 * (singleton_value + expected_utility_exact(instance, spec, order))
            for order in all_orders(instance, args.cap_orders)
        )
        bound = min(estimate.alpha / 8.0, (2.0 - estimate.beta) / 8.0) * optimum
        ok = worst_mix >= bound - EPSILON
        if not ok and properties_hold:
            failed = True
        checks.append(
            _check_entry(
                "theorem_knapsack",
                "pass" if ok else "fail",
                {"worst_mixed_value": worst_mix, "bound": bound, "v": estimate.value},
            )
        )

    payload = {
        "instance_hash": instance_hash(instance),
        "oracle_value": optimum,
        "checks": checks,
    }
    _write_output(_json_text(payload), args.out)
    return 1 if failed else 0


def cmd_oracle(args: argparse.Namespace) -> int:
    instance = _resolve_instance(args)
    optimum = optimal_pool_value(instance)
    item, singleton_value = best_singleton(instance)
    density_value = expected_utility_pool(instance, PoolPolicySpec("pool_density_greedy"))
    payload: dict = {
        "instance_hash": instance_hash(instance),
        "optimal_pool_value": optimum,
        "best_singleton": {"item": item, "value": singleton_value},
        "density_greedy_value": density_value,
        "estimates": {
            "exact": {"v": optimum, "alpha": 1.0, "beta": 1.0},
            "density_greedy": {
                "v": max(density_value, singleton_value),
                "alpha": (1.0 - 1.0 / math.e) / 2.0,
                "beta": 1.0,
            },
        },
    }
    if instance.costs.uniform and instance.budget == int(instance.budget):
        greedy_value = expected_utility_pool(instance, PoolPolicySpec("pool_greedy"))
        payload["greedy_value"] = greedy_value
        payload["estimates"]["greedy"] = {
            "v": greedy_value,
            "alpha": 1.0 - 1.0 / math.e,
            "beta": 1.0,
        }
    else:
        payload["greedy_value"] = None
    _write_output(_json_text(payload), args.out)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    rows = []
    for n in range(2, args.max_n + 1):
        instance = generate(
            GeneratorSpec(family="coverage", num_items=n, budget=2.0, seed=args.seed)
        )
        start = time.perf_counter()
        optimum = optimal_pool_value(instance)
        oracle_seconds = time.perf_counter() - start
        spec = StreamPolicySpec("threshold_uniform", max(optimum, 1e-9), "exact")
        start = time.perf_counter()
        orders = all_orders(instance, order_cap=max(args.cap_orders, n))
        worst = min(expected_utility_exact(instance, spec, order) for order in orders)
        orders_seconds = time.perf_counter() - start
        rows.append(
            {
                "n": n,
                "orders": len(orders),
                "oracle_seconds": round(oracle_seconds, 6),
                "order_sweep_seconds": round(orders_seconds, 6),
                "oracle_value": optimum,
                "worst_value": worst,
            }
        )
    _write_output(_json_text({"bench": rows}), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamsubmod",
        description="Stream-based adaptive submodular maximization harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_generate = sub.add_parser("generate", help="generate an instance JSON")
    _add_instance_source(p_generate)
    p_generate.add_argument("--out", help="output path (default stdout)")
    p_generate.set_defaults(func=cmd_generate)

    p_run = sub.add_parser("run", help="evaluate a policy and write a report")
    _add_instance_source(p_run)
    p_run.add_argument(
        "--policy",
        required=True,
        choices=STREAM_ALGORITHMS + POOL_ALGORITHMS,
        help="policy algorithm",
    )
    p_run.add_argument(
        "--v-mode",
        choices=("greedy", "density_greedy", "exact", "manual"),
        help="threshold estimation mode (default: greedy when costs are uniform, else density_greedy)",
    )
    p_run.add_argument("--v", type=float, help="manual threshold numerator")
    p_run.add_argument("--alpha", type=float, help="manual certified alpha")
    p_run.add_argument("--beta", type=float, help="manual certified beta")
    p_run.add_argument("--order", default="all", help="given|all|worst-sampled:K|random")
    p_run.add_argument("--permutation", help="comma-separated order for --order given")
    p_run.add_argument("--samples", type=int, help="Monte Carlo samples (omit for exact)")
    p_run.add_argument("--format", choices=("json", "csv"), default="json")
    p_run.add_argument("--out", help="output path (default stdout)")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--cap-orders", type=int, default=DEFAULT_ORDER_CAP)
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run property checkers and bound assertions")
    _add_instance_source(p_verify)
    p_verify.add_argument(
        "--skip",
        action="append",
        choices=(
            "adaptive_monotone",
            "adaptive_submodular",
            "semi_policywise",
            "policywise",
            "proposition1",
            "theorem_uniform",
            "theorem_knapsack",
        ),
        help="report this check as skipped",
    )
    p_verify.add_argument("--out", help="output path (default stdout)")
    p_verify.add_argument("--cap-orders", type=int, default=DEFAULT_ORDER_CAP)
    p_verify.set_defaults(func=cmd_verify)

    p_oracle = sub.add_parser("oracle", help="print offline estimation quantities")
    _add_instance_source(p_oracle)
    p_oracle.add_argument("--out", help="output path (default stdout)")
    p_oracle.set_defaults(func=cmd_oracle)

    p_bench = sub.add_parser("bench", help="time the oracle and order sweeps versus n")
    p_bench.add_argument("--max-n", type=int, default=6)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--cap-orders", type=int, default=DEFAULT_ORDER_CAP)
    p_bench.add_argument("--out", help="output path (default stdout)")
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_EXIT
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_EXIT
    except CAP_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CAP_EXIT
    except MODEL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return MODEL_EXIT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_EXIT


if __name__ == "__main__":
    sys.exit(main())
