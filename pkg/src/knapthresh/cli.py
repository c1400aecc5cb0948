"""Command-line entry point.

Subcommands: ``constants``, ``evaluate``, ``adversary``, ``multi``,
``experiment``, ``selftest``.  Identical argv plus seed produce
byte-identical output.  Exit codes: 0 success, 1 validation error,
2 internal verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import format_table, run_all
from .adversarial import (
    VerificationError,
    build_thm32,
    build_thm34,
    build_thm42,
    enumerate_thm42,
    verify_thm32,
    verify_thm34,
)
from .core import ItemSequence, simulate_two_bins
from .evaluation import expected_packed_exact, expected_packed_mc
from .experiments import (
    DEFAULT_POLICIES,
    ExperimentConfig,
    emit_results,
    ingest_csv,
    purse_dataset,
    run_experiment,
    synth_generate,
)
from .multiknapsack import MultiInstance, expected_combined, simulate_combined
from .optimum import SizeLimitError, opt_integer, opt_plus
from .thresholds import cdf_f1, cdf_f2, fixed_threshold_cdf, solve_constants

DEFAULT_SEED = 12345


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse default exits 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _parse_sizes(text: str, integer: bool) -> tuple:
    sizes = []
    for token in text.replace("\n", ",").split(","):
        token = token.strip()
        if not token:
            continue
        if integer:
            sizes.append(int(token))
        elif "/" in token:
            sizes.append(Fraction(token))
        else:
            sizes.append(float(token))
    if not sizes:
        raise ValueError("no sizes given")
    return tuple(sizes)


def _load_sequence(args) -> ItemSequence:
    if args.seq is not None:
        text = args.seq
    elif args.seq_file is not None:
        text = Path(args.seq_file).read_text(encoding="utf-8")
    else:
        raise ValueError("provide --seq or --seq-file")
    sizes = _parse_sizes(text, integer=args.capacity is not None)
    return ItemSequence(sizes, capacity=args.capacity)


def _resolve_cdf(name: str):
    if name == "f1":
        return cdf_f1()
    if name == "f2":
        return cdf_f2()
    if name == "greedy":
        return fixed_threshold_cdf(0.0)
    if name.startswith("fixed:"):
        return fixed_threshold_cdf(float(name.removeprefix("fixed:")))
    raise ValueError(f"unknown cdf {name!r}; use f1, f2, greedy, or fixed:<tau>")


def _cmd_constants(args) -> int:
    consts = solve_constants(args.tol)
    _emit_json(
        {
            key: float(f"{value:.15g}")
            for key, value in (
                ("q_star", consts.q_star),
                ("c_star", consts.c_star),
                ("f2_at_qstar", consts.f2_at_qstar),
            )
        }
    )
    return 0


def _optima(seq: ItemSequence) -> tuple[float, float | None]:
    plus = float(opt_plus(seq).value)
    try:
        integer = float(opt_integer(seq).value)
    except SizeLimitError:
        integer = None
    return plus, integer


def _cmd_evaluate(args) -> int:
    seq = _load_sequence(args)
    plus, integer = _optima(seq)
    report: dict = {"policy": args.cdf, "opt_plus": plus, "opt": integer}
    if args.cdf == "twobins":
        outcome = simulate_two_bins(seq)
        expected = float(outcome.expected_packed)
        report["heads_packed"] = float(outcome.heads.packed_total)
        report["tails_packed"] = float(outcome.tails.packed_total)
    else:
        cdf = _resolve_cdf(args.cdf)
        expected = expected_packed_exact(seq, cdf).expected_packed
        if args.mc_samples:
            mc = expected_packed_mc(seq, cdf, args.mc_samples, args.seed)
            report["mc_expected"] = mc.expected_packed
            report["mc_std_error"] = mc.std_error
    report["expected_packed"] = expected
    report["ratio_vs_opt_plus"] = expected / plus if plus > 0 else 1.0
    report["ratio_vs_opt"] = (
        None if integer is None else (expected / integer if integer > 0 else 1.0)
    )
    _emit_json(report)
    return 0


def _case_rows_payload(rows) -> list[dict]:
    return [
        {
            "case": r.case,
            "tau_low": r.tau_lo,
            "tau_high": r.tau_hi,
            "tau_rep": r.tau_rep,
            "closed_form": r.closed_form,
            "simulated": r.simulated,
        }
        for r in rows
    ]


def _print_case_table(rows) -> None:
    print(f"{'case':>4} {'tau range':>24} {'closed form':>16} {'simulated':>16}")
    for r in rows:
        rng = f"({r.tau_lo:.6g}, {r.tau_hi:.6g}]"
        print(f"{r.case:>4} {rng:>24} {r.closed_form:>16.12f} {r.simulated:>16.12f}")


def _sequence_payload(seq: ItemSequence) -> list[float]:
    return [float(s) for s in seq.sizes]


def _cmd_adversary(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.construction in ("thm32", "thm34"):
        if args.construction == "thm32":
            dist = build_thm32(args.epsilon)
            rows = verify_thm32(args.epsilon)
        else:
            dist = build_thm34(args.epsilon)
            rows = verify_thm34(args.epsilon)
        if args.emit == "table":
            _print_case_table(rows)
            print(f"total mass: {dist.total_mass:.9f}")
        elif args.emit == "json":
            _emit_json(
                {
                    "construction": args.construction,
                    "epsilon": args.epsilon,
                    "total_mass": dist.total_mass,
                    "cases": _case_rows_payload(rows),
                }
            )
        else:
            for _ in range(args.samples):
                print(",".join(repr(v) for v in _sequence_payload(dist.sample(rng))))
        return 0

    dist = build_thm42(args.knapsacks, args.epsilon)
    if args.emit == "samples":
        for _ in range(args.samples):
            inst = dist.sample(rng)
            print(
                json.dumps(
                    {
                        "capacities": [float(b) for b in inst.capacities],
                        "items": [[float(s) for s in vec] for vec in inst.items],
                    },
                    sort_keys=True,
                )
            )
        return 0
    enum = enumerate_thm42(4, args.epsilon)

    def over_24(value: Fraction) -> str:
        return f"{value.numerator * (24 // value.denominator)}/24"

    payload = {
        "construction": "thm42",
        "epsilon": args.epsilon,
        "n_knapsacks": args.knapsacks,
        "alpha_term": float(dist.parameters["alpha_term"]),
        "expected_opt": float(dist.parameters["expected_opt"]),
        "histograms": {str(e): h for e, h in enum.histograms.items()},
        "expected_phase2": {str(e): over_24(v) for e, v in enum.expected_phase2.items()},
        "ratio_by_e": {str(e): float(r) for e, r in enum.ratio_by_e.items()},
        "best_e": list(enum.best_e),
        "bound": float(enum.bound),
        "bound_limit": "35/76",
    }
    if args.emit == "json":
        _emit_json(payload)
    else:
        print(f"{'e':>2} {'phase-2 histogram':>24} {'expectation':>12} {'ratio':>10}")
        for e, hist in enum.histograms.items():
            print(
                f"{e:>2} {json.dumps(hist):>24} {over_24(enum.expected_phase2[e]):>12} "
                f"{float(enum.ratio_by_e[e]):>10.6f}"
            )
        print(
            f"best e: {list(enum.best_e)}, bound 35/(76-48eps) = "
            f"{float(enum.bound):.6f} -> 35/76 = {35 / 76:.6f} as eps -> 0"
        )
    return 0


def _cmd_multi(args) -> int:
    spec = json.loads(Path(args.instance).read_text(encoding="utf-8"))
    instance = MultiInstance(tuple(spec["capacities"]), tuple(map(tuple, spec["items"])))
    if args.thresholds is not None:
        taus = _parse_sizes(args.thresholds, integer=False)
        outcome = simulate_combined(instance, thresholds=taus)
    elif args.expected:
        cdf = _resolve_cdf(args.cdf)
        expectation = expected_combined(instance, cdf)
        _emit_json(
            {
                "expected_total": expectation.expected_total,
                "per_knapsack": list(expectation.per_knapsack),
                "routed_sets": [list(r) for r in expectation.routed_sets],
            }
        )
        return 0
    else:
        cdf = _resolve_cdf(args.cdf)
        outcome = simulate_combined(
            instance, cdf=cdf, rng=np.random.default_rng(args.seed)
        )
    _emit_json(
        {
            "assignment": list(outcome.assignment),
            "per_item_status": list(outcome.per_item_status),
            "per_knapsack_packed": [float(v) for v in outcome.per_knapsack_packed],
            "total_packed": float(sum(outcome.per_knapsack_packed)),
            "routed_sets": [list(r) for r in outcome.routed_sets],
            "thresholds": [float(t) for t in outcome.thresholds],
        }
    )
    return 0


def _cmd_experiment(args) -> int:
    if args.synthetic:
        dataset = synth_generate(args.n_skus, args.n_warehouses, args.seed)
    elif args.purse:
        dataset = purse_dataset()
    else:
        if args.orders is None or args.inventory is None:
            raise ValueError("provide --orders and --inventory, or --synthetic/--purse")
        dataset = ingest_csv(args.orders, args.inventory)
    alphas = tuple(float(a) for a in args.alphas.split(","))
    policies = (
        DEFAULT_POLICIES
        if args.policies is None
        else tuple(p.strip() for p in args.policies.split(","))
    )
    config = ExperimentConfig(
        alpha_grid=alphas,
        policies=policies,
        n_permutations=args.permutations,
        seed=args.seed,
        threads=args.threads,
    )
    results = run_experiment(dataset, config)
    paths = emit_results(results, args.out_dir)
    for warning in results.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    for path in paths:
        print(path)
    return 0


def _cmd_selftest(args) -> int:
    results = run_all(quick=args.quick)
    print(format_table(results))
    return 0 if all(r.passed for r in results) else 2


def build_parser() -> _Parser:
    parser = _Parser(prog="knapthresh", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("constants", parents=[common], help="solved CDF constants as JSON")
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(fn=_cmd_constants)

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a policy on a sequence")
    p.add_argument("--cdf", required=True, help="f1, f2, fixed:<tau>, twobins, or greedy")
    p.add_argument("--seq", help="comma-separated sizes (fractions allowed, e.g. 1/3)")
    p.add_argument("--seq-file", help="file with comma/newline separated sizes")
    p.add_argument("--capacity", type=int, help="integer capacity; switches to unit mode")
    p.add_argument("--mc-samples", type=int, default=0, help="add a Monte Carlo cross-check")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("adversary", parents=[common], help="tightness constructions")
    p.add_argument("--construction", required=True, choices=("thm32", "thm34", "thm42"))
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--emit", choices=("table", "samples", "json"), default="table")
    p.add_argument("--samples", type=int, default=10, help="count for --emit samples")
    p.add_argument("--knapsacks", type=int, default=4, help="knapsack count for thm42")
    p.set_defaults(fn=_cmd_adversary)

    p = sub.add_parser("multi", parents=[common], help="multi-knapsack routing policy")
    p.add_argument("--instance", required=True, help="JSON file {capacities, items}")
    p.add_argument("--thresholds", help="comma-separated per-knapsack thresholds")
    p.add_argument("--cdf", default="f1", help="CDF for drawn thresholds (default f1)")
    p.add_argument(
        "--expected", action="store_true", help="exact expectation instead of one draw"
    )
    p.set_defaults(fn=_cmd_multi)

    p = sub.add_parser("experiment", parents=[common], help="fulfillment replication")
    p.add_argument("--orders", help="orders CSV (sku_id,warehouse_id,arrival_index,order_size)")
    p.add_argument("--inventory", help="inventory CSV (sku_id,warehouse_id,initial_inventory)")
    p.add_argument("--synthetic", action="store_true", help="generate a synthetic dataset")
    p.add_argument("--purse", action="store_true", help="use the bundled purse stream")
    p.add_argument("--n-skus", type=int, default=974)
    p.add_argument("--n-warehouses", type=int, default=21)
    p.add_argument("--alphas", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    p.add_argument("--permutations", type=int, default=200)
    p.add_argument("--policies", help="comma-separated policy subset (default: all)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=_cmd_experiment)

    p = sub.add_parser("selftest", parents=[common], help="run the acceptance gate")
    p.add_argument("--quick", action="store_true", help="reduced suite sizes")
    p.set_defaults(fn=_cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
