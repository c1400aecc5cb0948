"""Machine-checkable acceptance gate.

Ten criteria covering the guarantees, the tightness constructions, and
the data pipeline, each returning a pass/fail record with its wall time.
``run_all`` executes every criterion; the CLI ``selftest`` subcommand and
the acceptance test module both drive this code, so the gate is one
implementation checked from two entry points.

Quick mode shrinks the suite sizes for smoke runs; the defaults match
the full gate.
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .adversarial import (
    build_thm32,
    build_thm34,
    enumerate_thm42,
    expected_discrete,
    verify_thm32,
    verify_thm34,
)
from .core import ItemSequence, simulate_greedy, simulate_two_bins
from .evaluation import bound_certificate, expected_packed_exact
from .experiments import (
    ExperimentConfig,
    emit_results,
    purse_dataset,
    run_experiment,
    synth_generate,
)
from .multiknapsack import MultiInstance, guarantee_check
from .optimum import opt_integer, opt_plus
from .thresholds import cdf_f1, cdf_f2, h_residual, solve_constants

SUITE_SEED = 20240817


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    description: str
    passed: bool
    detail: str
    seconds: float


@dataclass(frozen=True)
class SuiteScale:
    random_sequences: int = 10_000
    structured_sequences: int = 1_000
    multi_instances: int = 1_000
    n_skus: int = 974
    n_warehouses: int = 21
    n_permutations: int = 200


QUICK_SCALE = SuiteScale(
    random_sequences=500,
    structured_sequences=100,
    multi_instances=120,
    n_skus=40,
    n_warehouses=6,
    n_permutations=40,
)


def random_suite(n: int, rng: np.random.Generator) -> list[ItemSequence]:
    """Lengths 1-30, sizes uniform on (0, 1]."""
    out = []
    for _ in range(n):
        length = int(rng.integers(1, 31))
        sizes = 1.0 - rng.random(length)
        out.append(ItemSequence(tuple(float(s) for s in sizes)))
    return out


def structured_suite(n: int, rng: np.random.Generator) -> list[ItemSequence]:
    """Adversarially flavored sequences whose totals hover around 1."""
    out = []
    patterns = ("partition", "overshoot", "big_then_small", "dust_then_big", "halves")
    for i in range(n):
        kind = patterns[i % len(patterns)]
        if kind == "partition":
            # Exact partition of 1 into k random parts.
            k = int(rng.integers(2, 9))
            cuts = np.sort(rng.random(k - 1))
            parts = np.diff(np.concatenate(([0.0], cuts, [1.0])))
            sizes = [max(float(p), 1e-9) for p in parts]
        elif kind == "overshoot":
            k = int(rng.integers(2, 9))
            raw = rng.random(k) + 1e-9
            target = 1.0 + float(rng.uniform(-0.05, 0.05))
            sizes = [min(1.0, float(r * target / raw.sum())) for r in raw]
        elif kind == "big_then_small":
            big = float(rng.uniform(0.55, 1.0))
            k = int(rng.integers(1, 12))
            sizes = [big] + [float(rng.uniform(1e-4, 1 - big + 0.1))] * k
            sizes = [min(1.0, s) for s in sizes]
        elif kind == "dust_then_big":
            unit = float(rng.uniform(1e-4, 0.05))
            k = int(rng.integers(3, 25))
            sizes = [unit] * k + [float(rng.uniform(0.6, 1.0))]
        else:
            k = int(rng.integers(2, 6))
            sizes = [min(1.0, max(1e-9, float(rng.normal(0.5, 0.05)))) for _ in range(k)]
        out.append(ItemSequence(tuple(sizes)))
    return out


def rationalize(seqs: Iterable[ItemSequence], rng: np.random.Generator) -> list[ItemSequence]:
    """Snap each sequence onto a k/D grid (D <= 1000) as integer units."""
    out = []
    for seq in seqs:
        d = int(rng.integers(10, 1001))
        units = tuple(min(d, max(1, round(float(s) * d))) for s in seq.sizes)
        out.append(ItemSequence(units, capacity=d))
    return out


def _result(
    cid: int, description: str, passed: bool, detail: str, started: float
) -> CriterionResult:
    return CriterionResult(
        cid=cid,
        description=description,
        passed=passed,
        detail=detail,
        seconds=time.perf_counter() - started,
    )


def criterion_1_constants(scale: SuiteScale) -> CriterionResult:
    started = time.perf_counter()
    t0 = time.perf_counter()
    consts = solve_constants.__wrapped__(1e-12)
    solve_seconds = time.perf_counter() - t0
    residual = abs(h_residual(consts.c_star, consts.q_star))
    checks = {
        "q_star": abs(consts.q_star - 0.31847) <= 5e-5,
        "c_star": abs(consts.c_star - 0.43236) <= 5e-5,
        "H_residual": residual <= 1e-10,
        "runtime": solve_seconds < 1e-3,
    }
    detail = (
        f"q*={consts.q_star:.6f} c*={consts.c_star:.6f} |H|={residual:.2e} "
        f"solve={solve_seconds * 1e6:.0f}us"
    )
    return _result(1, "constants solver", all(checks.values()), detail, started)


def _guarantee_sweep(
    seqs: list[ItemSequence],
    value_fn: Callable[[ItemSequence], float],
    target_fn: Callable[[ItemSequence], float],
) -> tuple[int, float]:
    """Count violations of value >= target - 1e-9; return (violations, worst slack)."""
    violations = 0
    worst = math.inf
    for seq in seqs:
        slack = value_fn(seq) - target_fn(seq)
        worst = min(worst, slack)
        if slack < -1e-9:
            violations += 1
    return violations, worst


def _fraction_suites(scale: SuiteScale) -> list[ItemSequence]:
    rng = np.random.default_rng([SUITE_SEED, 2])
    return random_suite(scale.random_sequences, rng) + structured_suite(
        scale.structured_sequences, rng
    )


def criterion_2_f1_guarantee(scale: SuiteScale) -> CriterionResult:
    started = time.perf_counter()
    f1 = cdf_f1()
    seqs = _fraction_suites(scale)
    violations, worst = _guarantee_sweep(
        seqs,
        lambda s: expected_packed_exact(s, f1).expected_packed,
        lambda s: (3 / 7) * float(opt_plus(s).value),
    )
    elapsed = time.perf_counter() - started
    passed = violations == 0 and elapsed < 30
    detail = f"{len(seqs)} sequences, violations={violations}, worst slack={worst:.3e}"
    return _result(2, "3/7 guarantee vs fractional optimum", passed, detail, started)


def criterion_3_f2_guarantee(scale: SuiteScale) -> CriterionResult:
    started = time.perf_counter()
    f2 = cdf_f2()
    c_star = solve_constants().c_star
    rng = np.random.default_rng([SUITE_SEED, 3])
    seqs = rationalize(_fraction_suites(scale), rng)

    def value(seq: ItemSequence) -> float:
        return expected_packed_exact(seq, f2).expected_packed / seq.capacity

    def target(seq: ItemSequence) -> float:
        return c_star * int(opt_integer(seq).value) / seq.capacity

    violations, worst = _guarantee_sweep(seqs, value, target)
    elapsed = time.perf_counter() - started
    passed = violations == 0 and elapsed < 120
    detail = f"{len(seqs)} rational sequences, violations={violations}, worst slack={worst:.3e}"
    return _result(3, "c* guarantee vs integer optimum", passed, detail, started)


def criterion_4_thm32_tightness(scale: SuiteScale) -> CriterionResult:
    started = time.perf_counter()
    ok = True
    details = []
    for eps in (1e-3, 1e-4):
        rows = verify_thm32(eps)
        dist = build_thm32(eps)
        u = dist.parameters["unit"]
        expected_rows = {
            1: Fraction(3, 7) + Fraction(4, 7) * u,
            2: Fraction(3, 7),
            3: Fraction(3, 7) + Fraction(3, 7) * u,
            4: Fraction(1, 7),
        }
        for row in rows:
            if abs(row.closed_form - float(expected_rows[row.case])) > 1e-12:
                ok = False
            if abs(row.closed_form - row.simulated) > 1e-9:
                ok = False
        taus = [Fraction(0), u / 2, u, Fraction(1, 5), Fraction(1, 3), Fraction(2, 5),
                Fraction(1, 2), Fraction(2, 3), Fraction(2, 3) + u, Fraction(9, 10),
                Fraction(1)]
        ratios = [float(expected_discrete(dist, t)) for t in taus]
        bound = 3 / 7 + 4 * eps / 7
        if max(ratios) > bound + 1e-12:
            ok = False
        details.append(f"eps={eps:g}: max ratio {max(ratios):.8f} <= {bound:.8f}")
    return _result(4, "tightness of 3/7 (case table + max ratio)", ok, "; ".join(details), started)


def criterion_5_thm34_tightness(scale: SuiteScale) -> CriterionResult:
    started = time.perf_counter()
    consts = solve_constants()
    c = consts.c_star
    eps = 1e-3
    rows = verify_thm34(eps, consts)
    x = (1 - 2 * c) / (1 - 2 * consts.q_star)
    by_case = {r.case: r for r in rows}
    checks = {
        "case2": abs(by_case[2].closed_form - c) <= 1e-7,
        "case4": abs(by_case[4].closed_form - c) <= 1e-7,
        "case1": c - 1e-9 <= by_case[1].closed_form <= c + eps * (1 - x) + 1e-7,
        "case3": c - 1e-9 <= by_case[3].closed_form <= c + eps * x + 1e-7,
        "max": max(r.closed_form for r in rows) <= c + eps * (1 - x) + 1e-7,
    }
    mass = build_thm34(eps, consts).total_mass
    checks["mass"] = abs(mass - 1) <= 1e-6
    detail = (
        f"case values {[f'{r.closed_form:.8f}' for r in rows]}, c*={c:.8f}, "
        f"mass={mass:.9f}"
    )
    return _result(5, "tightness of c* (case table + mass)", all(checks.values()), detail, started)


def criterion_6_two_bins(scale: SuiteScale) -> CriterionResult:
    started = time.perf_counter()
    seqs = _fraction_suites(scale)
    violations, worst = _guarantee_sweep(
        seqs,
        lambda s: float(simulate_two_bins(s).expected_packed),
        lambda s: 0.5 * float(opt_plus(s).value),
    )
    detail = f"{len(seqs)} sequences, violations={violations}, worst slack={worst:.3e}"
    return _result(6, "two-phase coin policy >= OPT+/2", violations == 0, detail, started)


def criterion_7_thm42_enumeration(scale: SuiteScale) -> CriterionResult:
    started = time.perf_counter()
    eps = 1e-3
    enum = enumerate_thm42(4, eps)
    eps_f = Fraction(eps)
    expected_hist = {0: {2: 6, 3: 17, 4: 1}, 1: {2: 16, 3: 8}, 2: {1: 6, 2: 18}}
    expected_e2 = {0: Fraction(67, 24), 1: Fraction(56, 24), 2: Fraction(42, 24)}
    checks = [enum.histograms[e] == expected_hist[e] for e in expected_hist]
    checks += [enum.expected_phase2[e] == expected_e2[e] for e in expected_e2]
    bound = Fraction(35) / (76 - 48 * eps_f)
    checks.append(enum.ratio_by_e[1] == bound and enum.ratio_by_e[2] == bound)
    checks.append(enum.best_e == (1, 2))
    checks.append(abs(float(bound) - 35 / 76) < 1e-3)
    elapsed = time.perf_counter() - started
    checks.append(elapsed < 1.0)
    detail = f"bound={float(bound):.6f}, limit 35/76={35 / 76:.6f}, elapsed={elapsed:.3f}s"
    return _result(7, "upper-triangular enumeration", all(checks), detail, started)


def random_multi_instances(n: int, rng: np.random.Generator) -> list[MultiInstance]:
    """N <= 3 knapsacks with B_j >= 1, T <= 8 items, sizes in [0, 1]."""
    out = []
    for _ in range(n):
        n_knap = int(rng.integers(1, 4))
        n_items = int(rng.integers(1, 9))
        caps = tuple(
            1.0 if rng.random() < 0.5 else float(rng.uniform(1.0, 2.0))
            for _ in range(n_knap)
        )
        items = []
        for _ in range(n_items):
            vec = [float(s) for s in (1.0 - rng.random(n_knap))]
            for j in range(n_knap):
                if rng.random() < 0.2:
                    vec[j] = 0.0
            items.append(tuple(vec))
        out.append(MultiInstance(caps, tuple(items)))
    return out


def criterion_8_multi_guarantee(scale: SuiteScale) -> CriterionResult:
    started = time.perf_counter()
    f1 = cdf_f1()
    rng = np.random.default_rng([SUITE_SEED, 8])
    instances = random_multi_instances(scale.multi_instances, rng)
    violations = 0
    worst = math.inf
    for inst in instances:
        report = guarantee_check(inst, f1)
        worst = min(worst, report.ratio)
        if report.ratio < 3 / 14 - 1e-9:
            violations += 1
    elapsed = time.perf_counter() - started
    passed = violations == 0 and elapsed < 120
    detail = f"{len(instances)} instances, violations={violations}, min ratio={worst:.6f}"
    return _result(8, "3/14 guarantee on multiple knapsacks", passed, detail, started)


def criterion_9_certificates(scale: SuiteScale) -> CriterionResult:
    started = time.perf_counter()
    f1 = cdf_f1()
    seqs = _fraction_suites(scale)
    checked = 0
    failures = 0
    for seq in seqs:
        if not simulate_greedy(seq).blocked_indices:
            continue
        checked += 1
        if not bound_certificate(seq, f1).holds:
            failures += 1
    detail = f"{checked} certificates, failures={failures}"
    return _result(9, "proof-bound certificates hold", failures == 0, detail, started)


def criterion_10_replication(scale: SuiteScale) -> CriterionResult:
    started = time.perf_counter()
    f1 = cdf_f1()
    dataset = synth_generate(scale.n_skus, scale.n_warehouses, seed=7)
    config = ExperimentConfig(
        alpha_grid=(0.5, 1.0), n_permutations=scale.n_permutations, seed=7
    )
    results = run_experiment(dataset, config)

    fcfs_at_one = [
        r.ratio for r in results.rows if r.policy == "fcfs" and r.alpha_scale == 1.0
    ]
    check_a = all(r == 1.0 for r in fcfs_at_one)

    check_b = True
    for sku in dataset.skus:
        for wh in dataset.warehouses_of(sku):
            sizes, inv = dataset.stream(sku, wh)
            for alpha in config.alpha_grid:
                cap = math.floor(alpha * inv)
                if cap <= 0 or not sizes:
                    continue
                seq = ItemSequence(sizes, capacity=cap)
                opt = int(opt_integer(seq).value)
                opt_p = min(sum(sizes), cap)
                if opt != opt_p or opt == 0:
                    continue
                ratio = expected_packed_exact(seq, f1).expected_packed / opt
                if ratio < 3 / 7 - 1e-9:
                    check_b = False

    purse = purse_dataset()
    purse_results = run_experiment(
        purse, ExperimentConfig(alpha_grid=(0.5,), n_permutations=1, seed=7)
    )
    sizes, inv = purse.stream("PURSE-01", "W01")
    cap = math.floor(0.5 * inv)
    opt = int(opt_integer(ItemSequence(sizes, capacity=cap)).value)
    fcfs_row = next(
        r for r in purse_results.rows if r.policy == "fcfs" and r.alpha_scale == 0.5
    )
    check_c = opt == 104 and abs(fcfs_row.ratio - 97 / 104) < 1e-12

    with tempfile.TemporaryDirectory() as tmp:
        dir_a, dir_b = Path(tmp) / "a", Path(tmp) / "b"
        emit_results(results, dir_a)
        emit_results(run_experiment(dataset, config), dir_b)
        names = ["per_sku.csv", "aggregate_mean.csv", "aggregate_min.csv"]
        check_d = all(
            filecmp.cmp(dir_a / n, dir_b / n, shallow=False) for n in names
        )

    elapsed = time.perf_counter() - started
    passed = check_a and check_b and check_c and check_d and elapsed < 300
    detail = (
        f"fcfs@1={check_a}, per-cell 3/7={check_b}, purse 97/104={check_c}, "
        f"determinism={check_d}, elapsed={elapsed:.1f}s"
    )
    return _result(10, "fulfillment replication pipeline", passed, detail, started)


CRITERIA: tuple[Callable[[SuiteScale], CriterionResult], ...] = (
    criterion_1_constants,
    criterion_2_f1_guarantee,
    criterion_3_f2_guarantee,
    criterion_4_thm32_tightness,
    criterion_5_thm34_tightness,
    criterion_6_two_bins,
    criterion_7_thm42_enumeration,
    criterion_8_multi_guarantee,
    criterion_9_certificates,
    criterion_10_replication,
)


def run_all(quick: bool = False) -> list[CriterionResult]:
    scale = QUICK_SCALE if quick else SuiteScale()
    return [criterion(scale) for criterion in CRITERIA]


def format_table(results: list[CriterionResult]) -> str:
    lines = []
    for r in results:
        flag = "PASS" if r.passed else "FAIL"
        lines.append(f"[{flag}] {r.cid:>2}. {r.description} ({r.seconds:.2f}s) :: {r.detail}")
    return "\n".join(lines)
