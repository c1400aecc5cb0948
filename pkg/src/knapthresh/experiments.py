"""Order-fulfillment replication pipeline.

Streams of integer order sizes, one per (SKU, warehouse), packed against
a starting inventory.  Observed data of this kind is FCFS-censored: it
contains only the orders a first-come-first-serve policy accepted, so
totals never exceed the starting inventory and full-inventory runs are
trivial.  Non-trivial instances come from rescaling the inventory by a
factor alpha in (0, 1] (floored to whole units) and re-running policies
against the exact integer optimum of the rescaled instance.

Policies compared per (SKU, warehouse, alpha): FCFS, ten fixed
percent-of-capacity thresholds, the exact two-branch coin policy, and
the random-threshold policy realized by assigning k evenly spaced CDF
percentiles to a SKU's k warehouses under a random permutation
(simulation per warehouse is deterministic; the permutation is the only
randomness, averaged over ``n_permutations`` draws).  Every value is
divided by the integer optimum of the same rescaled instance.

All randomness flows from per-cell seeded substreams, so results are
byte-stable regardless of iteration order or worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import ItemSequence, packed_value, simulate_greedy, simulate_two_bins
from .optimum import opt_integer
from .thresholds import ThresholdCdf, cdf_f1, cdf_f2, percentile_grid

ORDERS_HEADER = ["sku_id", "warehouse_id", "arrival_index", "order_size"]
INVENTORY_HEADER = ["sku_id", "warehouse_id", "initial_inventory"]

FIXED_THRESHOLD_PERCENTS = (3, 5, 10, 15, 20, 30, 40, 50, 60, 80)
DEFAULT_POLICIES = (
    ("fcfs",)
    + tuple(f"fixed_{p}" for p in FIXED_THRESHOLD_PERCENTS)
    + ("twobins", "random_threshold")
)


@dataclass(frozen=True)
class OrderDataset:
    """Per-(SKU, warehouse) order streams plus starting inventories."""

    orders: dict[tuple[str, str], tuple[int, ...]]
    inventory: dict[tuple[str, str], int]
    warnings: tuple[str, ...] = ()

    @property
    def skus(self) -> tuple[str, ...]:
        return tuple(sorted({sku for sku, _ in self.orders}))

    def warehouses_of(self, sku: str) -> tuple[str, ...]:
        return tuple(sorted(wh for s, wh in self.orders if s == sku))

    def stream(self, sku: str, warehouse: str) -> tuple[tuple[int, ...], int]:
        key = (sku, warehouse)
        return self.orders[key], self.inventory[key]


@dataclass(frozen=True)
class ExperimentConfig:
    alpha_grid: tuple[float, ...]
    policies: tuple[str, ...] = DEFAULT_POLICIES
    n_permutations: int = 200
    seed: int = 0
    capacity_rounding: str = "floor"
    random_threshold_cdf: str = "f1"
    threads: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha_grid", tuple(self.alpha_grid))
        object.__setattr__(self, "policies", tuple(self.policies))
        if not self.alpha_grid:
            raise ValueError("alpha_grid must be nonempty")
        if list(self.alpha_grid) != sorted(self.alpha_grid):
            raise ValueError("alpha_grid must be sorted ascending")
        for a in self.alpha_grid:
            if not 0 < a <= 1:
                raise ValueError(f"alpha scales must lie in (0, 1], got {a}")
        if self.n_permutations < 1:
            raise ValueError("n_permutations must be >= 1")
        if self.capacity_rounding != "floor":
            raise ValueError("only floor capacity rounding is supported")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        for p in self.policies:
            if p not in ("fcfs", "twobins", "random_threshold") and not p.startswith(
                "fixed_"
            ):
                raise ValueError(f"unknown policy {p!r}")


@dataclass(frozen=True)
class SkuPerformance:
    sku_id: str
    alpha_scale: float
    policy: str
    ratio: float


@dataclass(frozen=True)
class ExperimentResults:
    rows: tuple[SkuPerformance, ...]
    aggregate_mean: dict[tuple[float, str], float]
    aggregate_min: dict[tuple[float, str], float]
    alpha_grid: tuple[float, ...]
    policies: tuple[str, ...]
    warnings: tuple[str, ...] = ()


class CsvFormatError(ValueError):
    """Malformed input row; the message carries the offending line number."""


def _read_rows(path: str | Path, header: list[str]) -> list[tuple[int, list[str]]]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [(lineno, row) for lineno, row in enumerate(reader, start=1) if row]
    if not rows:
        return []
    first_line, first = rows[0]
    if first != header:
        raise CsvFormatError(
            f"{path}:{first_line}: expected header {','.join(header)}, got {','.join(first)}"
        )
    return rows[1:]


def _parse_positive_int(value: str, what: str, where: str) -> int:
    try:
        parsed = int(value)
    except ValueError:
        raise CsvFormatError(f"{where}: {what} must be an integer, got {value!r}") from None
    if parsed < 1:
        raise CsvFormatError(f"{where}: {what} must be >= 1, got {parsed}")
    return parsed


def ingest_csv(orders_path: str | Path, inventory_path: str | Path) -> OrderDataset:
    """Parse an orders file and its companion inventory file.

    Structural problems (bad header, non-positive sizes, duplicate
    arrival indices, missing inventory) raise with a line number;
    breaches of the censoring invariants (non-contiguous arrival indices,
    totals above inventory) are collected as warnings.
    """
    inventory: dict[tuple[str, str], int] = {}
    for lineno, row in _read_rows(inventory_path, INVENTORY_HEADER):
        where = f"{inventory_path}:{lineno}"
        if len(row) != 3:
            raise CsvFormatError(f"{where}: expected 3 fields, got {len(row)}")
        sku, wh, inv = row[0], row[1], _parse_positive_int(row[2], "initial_inventory", where)
        if (sku, wh) in inventory:
            raise CsvFormatError(f"{where}: duplicate inventory row for ({sku}, {wh})")
        inventory[(sku, wh)] = inv

    arrivals: dict[tuple[str, str], dict[int, int]] = {}
    for lineno, row in _read_rows(orders_path, ORDERS_HEADER):
        where = f"{orders_path}:{lineno}"
        if len(row) != 4:
            raise CsvFormatError(f"{where}: expected 4 fields, got {len(row)}")
        sku, wh = row[0], row[1]
        idx = _parse_positive_int(row[2], "arrival_index", where)
        size = _parse_positive_int(row[3], "order_size", where)
        if (sku, wh) not in inventory:
            raise CsvFormatError(f"{where}: no inventory row for ({sku}, {wh})")
        per = arrivals.setdefault((sku, wh), {})
        if idx in per:
            raise CsvFormatError(f"{where}: duplicate arrival_index {idx} for ({sku}, {wh})")
        per[idx] = size

    warnings: list[str] = []
    orders: dict[tuple[str, str], tuple[int, ...]] = {}
    for key in sorted(arrivals):
        per = arrivals[key]
        indices = sorted(per)
        if indices != list(range(1, len(indices) + 1)):
            warnings.append(
                f"({key[0]}, {key[1]}): arrival indices not contiguous from 1"
            )
        sizes = tuple(per[i] for i in indices)
        if sum(sizes) > inventory[key]:
            warnings.append(
                f"({key[0]}, {key[1]}): order total {sum(sizes)} exceeds starting "
                f"inventory {inventory[key]} (stream is not FCFS-censored)"
            )
        orders[key] = sizes
    return OrderDataset(orders=orders, inventory=inventory, warnings=tuple(warnings))


def purse_dataset() -> OrderDataset:
    """The published women's-purse order stream: one SKU, one warehouse,
    orders (7, 18, 80, 41, 1, 30, 12, 17) against 208 starting units."""
    key = ("PURSE-01", "W01")
    return OrderDataset(
        orders={key: (7, 18, 80, 41, 1, 30, 12, 17)},
        inventory={key: 208},
    )


def synth_generate(n_skus: int, n_warehouses: int, seed: int) -> OrderDataset:
    """Synthetic FCFS-censored order streams, deterministic per seed.

    Each (SKU, warehouse) draws an inventory and a raw lognormal order
    stream, then keeps exactly the orders a greedy FCFS pass accepts, so
    every stream satisfies the censoring invariant by construction and
    late large orders are systematically thinned out.
    """
    if n_skus < 1 or n_warehouses < 1:
        raise ValueError("n_skus and n_warehouses must be >= 1")
    orders: dict[tuple[str, str], tuple[int, ...]] = {}
    inventory: dict[tuple[str, str], int] = {}
    for s in range(n_skus):
        sku = f"SKU{s:04d}"
        for w in range(n_warehouses):
            wh = f"W{w:02d}"
            rng = np.random.default_rng([seed, s, w])
            inv = int(np.clip(np.round(rng.lognormal(4.6, 0.7)), 20, 2000))
            n_raw = int(rng.integers(3, 36))
            raw = np.maximum(
                1, np.round(rng.lognormal(math.log(inv / 8.0), 0.9, n_raw))
            ).astype(int)
            raw[0] = min(int(raw[0]), inv)
            kept: list[int] = []
            remaining = inv
            for size in raw:
                if size <= remaining:
                    kept.append(int(size))
                    remaining -= int(size)
            orders[(sku, wh)] = tuple(kept)
            inventory[(sku, wh)] = inv
    return OrderDataset(orders=orders, inventory=inventory)


def percentile_thresholds(cdf: ThresholdCdf, k: int) -> tuple[float, ...]:
    """k evenly spaced quantiles of the threshold distribution.

    SKUs stored in fewer warehouses get k equal to their warehouse count;
    k = 1 degenerates to the zero threshold, i.e. FCFS.
    """
    return percentile_grid(cdf, k)


def _scaled_capacity(inventory: int, alpha: float) -> int:
    return math.floor(alpha * inventory)


def _resolve_rt_cdf(name: str) -> ThresholdCdf:
    if name == "f1":
        return cdf_f1()
    if name == "f2":
        return cdf_f2()
    raise ValueError(f"unknown random_threshold_cdf {name!r}")


def _sku_cell_values(
    sizes: tuple[int, ...], cap: int, policies: tuple[str, ...]
) -> tuple[dict[str, float], int]:
    """Deterministic policy values and the integer optimum for one cell."""
    seq = ItemSequence(sizes, capacity=max(cap, 1)) if sizes else None
    values: dict[str, float] = {}
    if cap <= 0 or seq is None:
        opt = 0
        for policy in policies:
            if policy != "random_threshold":
                values[policy] = 0.0
        return values, opt
    opt = int(opt_integer(seq, cap).value)
    for policy in policies:
        if policy == "fcfs":
            values[policy] = float(simulate_greedy(seq, cap).packed_total)
        elif policy == "twobins":
            values[policy] = float(simulate_two_bins(seq, cap).expected_packed)
        elif policy.startswith("fixed_"):
            tau = Fraction(int(policy.removeprefix("fixed_")), 100)
            values[policy] = float(packed_value(seq, tau, cap))
    return values, opt


def _ratio(value: float, opt: int) -> float:
    return value / opt if opt > 0 else 1.0


def _run_sku(
    sku: str,
    dataset: OrderDataset,
    config: ExperimentConfig,
    sku_index: int,
    rt_cdf: ThresholdCdf,
) -> tuple[list[SkuPerformance], list[str]]:
    warehouses = dataset.warehouses_of(sku)
    k = len(warehouses)
    thresholds = percentile_thresholds(rt_cdf, k)
    rows: list[SkuPerformance] = []
    notes: list[str] = []
    if k == 1 and "random_threshold" in config.policies:
        notes.append(
            f"{sku}: stored in a single warehouse; random_threshold degenerates to fcfs"
        )
    for alpha_index, alpha in enumerate(config.alpha_grid):
        per_policy: dict[str, list[float]] = {p: [] for p in config.policies}
        rt_matrix = np.zeros((k, k)) if "random_threshold" in config.policies else None
        for w_index, wh in enumerate(warehouses):
            sizes, inv = dataset.stream(sku, wh)
            cap = _scaled_capacity(inv, alpha)
            values, opt = _sku_cell_values(sizes, cap, config.policies)
            for policy, value in values.items():
                per_policy[policy].append(_ratio(value, opt))
            if rt_matrix is not None:
                if cap <= 0 or not sizes:
                    rt_matrix[w_index, :] = 1.0
                else:
                    seq = ItemSequence(sizes, capacity=cap)
                    for t_index, tau in enumerate(thresholds):
                        rt_matrix[w_index, t_index] = _ratio(
                            float(packed_value(seq, tau, cap)), opt
                        )
        for policy in config.policies:
            if policy == "random_threshold":
                rng = np.random.default_rng([config.seed, sku_index, alpha_index])
                perm_means = [
                    float(rt_matrix[np.arange(k), rng.permutation(k)].mean())
                    for _ in range(config.n_permutations)
                ]
                ratio = float(np.mean(perm_means))
            else:
                ratio = float(np.mean(per_policy[policy]))
            rows.append(
                SkuPerformance(sku_id=sku, alpha_scale=alpha, policy=policy, ratio=ratio)
            )
    return rows, notes


def run_experiment(dataset: OrderDataset, config: ExperimentConfig) -> ExperimentResults:
    """Full sweep over (SKU, alpha, policy); see the module docstring.

    Cells are independent work units; ``config.threads > 1`` fans the
    per-SKU work over a thread pool with an ordered reduction, so the
    output is identical at any worker count.
    """
    skus = dataset.skus
    if not skus:
        raise ValueError("dataset has no order streams")
    rt_cdf = _resolve_rt_cdf(config.random_threshold_cdf)

    def work(item: tuple[int, str]) -> tuple[list[SkuPerformance], list[str]]:
        idx, sku = item
        return _run_sku(sku, dataset, config, idx, rt_cdf)

    jobs = list(enumerate(skus))
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outputs = list(pool.map(work, jobs))
    else:
        outputs = [work(job) for job in jobs]

    rows: list[SkuPerformance] = []
    warnings = list(dataset.warnings)
    for sku_rows, notes in outputs:
        rows.extend(sku_rows)
        warnings.extend(notes)

    aggregate_mean: dict[tuple[float, str], float] = {}
    aggregate_min: dict[tuple[float, str], float] = {}
    for alpha in config.alpha_grid:
        for policy in config.policies:
            ratios = [r.ratio for r in rows if r.alpha_scale == alpha and r.policy == policy]
            aggregate_mean[(alpha, policy)] = float(np.mean(ratios))
            aggregate_min[(alpha, policy)] = float(min(ratios))
    return ExperimentResults(
        rows=tuple(rows),
        aggregate_mean=aggregate_mean,
        aggregate_min=aggregate_min,
        alpha_grid=config.alpha_grid,
        policies=config.policies,
        warnings=tuple(warnings),
    )


def emit_results(results: ExperimentResults, out_dir: str | Path) -> tuple[Path, ...]:
    """Write per_sku.csv, aggregate_mean.csv, aggregate_min.csv.

    Row order and float formatting are deterministic, so reruns with the
    same seed produce byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    per_sku = out / "per_sku.csv"
    with per_sku.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sku", "alpha", "policy", "ratio"])
        for row in results.rows:
            writer.writerow(
                [row.sku_id, f"{row.alpha_scale:g}", row.policy, repr(row.ratio)]
            )

    paths = [per_sku]
    for name, table in (
        ("aggregate_mean.csv", results.aggregate_mean),
        ("aggregate_min.csv", results.aggregate_min),
    ):
        path = out / name
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["alpha", "policy", "ratio"])
            for alpha in results.alpha_grid:
                for policy in results.policies:
                    writer.writerow(
                        [f"{alpha:g}", policy, repr(table[(alpha, policy)])]
                    )
        paths.append(path)
    return tuple(paths)
