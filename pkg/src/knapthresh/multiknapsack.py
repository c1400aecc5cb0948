"""Multiple knapsacks: greedy routing plus per-knapsack threshold admission.

Each arriving item carries one size per knapsack and is first *routed* to
the knapsack where it takes the greatest size, ignoring fill state; a
per-knapsack threshold then decides admission exactly as in the single
knapsack.  Routing is a pure function of the size vectors, so the routed
streams can be evaluated independently, which makes the expected total
under independent threshold draws separable across knapsacks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ACCEPTED, BLOCKED, REJECTED, ItemSequence, Number, _is_exact
from .evaluation import expected_packed_exact
from .optimum import opt_multi
from .thresholds import ThresholdCdf, sample

UNROUTABLE = "unroutable"


@dataclass(frozen=True)
class MultiInstance:
    """Capacities B_j plus per-item size vectors; a zero entry means the
    item cannot use that knapsack."""

    capacities: tuple[Number, ...]
    items: tuple[tuple[Number, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "capacities", tuple(self.capacities))
        object.__setattr__(self, "items", tuple(tuple(v) for v in self.items))
        n = len(self.capacities)
        if n < 1:
            raise ValueError("need at least one knapsack")
        for j, b in enumerate(self.capacities):
            if b <= 0:
                raise ValueError(f"capacity of knapsack {j} must be positive, got {b!r}")
        for t, vec in enumerate(self.items):
            if len(vec) != n:
                raise ValueError(f"item {t} has {len(vec)} sizes, expected {n}")
            for j, s in enumerate(vec):
                if not 0 <= s <= 1:
                    raise ValueError(f"size of item {t} in knapsack {j} must be in [0, 1]")

    @property
    def n_knapsacks(self) -> int:
        return len(self.capacities)

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class MultiOutcome:
    """Assignment trace: None means the item ended up nowhere."""

    assignment: tuple[Optional[int], ...]
    per_item_status: tuple[str, ...]
    per_knapsack_packed: tuple[Number, ...]
    routed_sets: tuple[tuple[int, ...], ...]
    thresholds: tuple[Number, ...]


@dataclass(frozen=True)
class MultiExpectation:
    expected_total: float
    per_knapsack: tuple[float, ...]
    routed_sets: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class GuaranteeReport:
    expected_total: float
    opt: float
    ratio: float


def route_greedy(instance: MultiInstance) -> tuple[tuple[int, ...], ...]:
    """Routed sets I_j under argmax-size routing, ties to the lowest index.

    All-zero items are routed nowhere; they appear in no I_j.
    """
    routed: list[list[int]] = [[] for _ in instance.capacities]
    for t, vec in enumerate(instance.items):
        best = max(vec)
        if best > 0:
            routed[vec.index(best)].append(t)
    return tuple(tuple(r) for r in routed)


def _route_one(
    vec: tuple[Number, ...], packed: list[Number], tie_break: str
) -> Optional[int]:
    best = max(vec)
    if best <= 0:
        return None
    ties = [j for j, s in enumerate(vec) if s == best]
    if tie_break == "lowest_empty":
        for j in ties:
            if packed[j] == 0:
                return j
    return ties[0]


def simulate_combined(
    instance: MultiInstance,
    thresholds: Sequence[Number] | None = None,
    cdf: ThresholdCdf | None = None,
    rng: np.random.Generator | None = None,
    tie_break: str = "lowest_index",
) -> MultiOutcome:
    """Route each item greedily, then admit per-knapsack at threshold tau_j.

    Pass either explicit per-knapsack ``thresholds`` or a ``cdf`` plus
    ``rng``, in which case one independent threshold is drawn per
    knapsack up front.  Admission in knapsack j is
    ``size >= tau_j * B_j`` and the item must fit.  ``tie_break`` is
    "lowest_index" (the default routing rule) or "lowest_empty", which
    prefers still-empty knapsacks among argmax ties.
    """
    if tie_break not in ("lowest_index", "lowest_empty"):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    n = instance.n_knapsacks
    if thresholds is None:
        if cdf is None or rng is None:
            raise ValueError("provide either thresholds or a cdf with an rng")
        thresholds = tuple(sample(cdf, rng) for _ in range(n))
    else:
        thresholds = tuple(thresholds)
        if len(thresholds) != n:
            raise ValueError(f"expected {n} thresholds, got {len(thresholds)}")
        for tau in thresholds:
            if not 0 <= tau <= 1:
                raise ValueError(f"thresholds must lie in [0, 1], got {tau!r}")

    exact = all(_is_exact(v) for v in thresholds) and all(
        _is_exact(v) for v in instance.capacities
    ) and all(_is_exact(s) for vec in instance.items for s in vec)
    packed: list[Number] = [0] * n
    assignment: list[Optional[int]] = [None] * len(instance.items)
    statuses: list[str] = []
    routed: list[list[int]] = [[] for _ in range(n)]
    for t, vec in enumerate(instance.items):
        j = _route_one(vec, packed, tie_break)
        if j is None:
            statuses.append(UNROUTABLE)
            continue
        routed[j].append(t)
        s = vec[j]
        cap = instance.capacities[j]
        admit_slack = 0 if exact else 1e-9 * float(cap)
        fit_slack = 0 if exact else 1e-12 * float(cap)
        if s > cap - packed[j] + fit_slack:
            statuses.append(BLOCKED)
        elif s < thresholds[j] * cap - admit_slack:
            statuses.append(REJECTED)
        else:
            statuses.append(ACCEPTED)
            assignment[t] = j
            packed[j] += s
    return MultiOutcome(
        assignment=tuple(assignment),
        per_item_status=tuple(statuses),
        per_knapsack_packed=tuple(packed),
        routed_sets=tuple(tuple(r) for r in routed),
        thresholds=thresholds,
    )


def expected_combined(instance: MultiInstance, cdf: ThresholdCdf) -> MultiExpectation:
    """Exact expected total under independent per-knapsack draws from ``cdf``.

    Independence makes the expectation separable: each knapsack is a
    single-knapsack expectation over its routed subsequence.
    """
    routed = route_greedy(instance)
    per: list[float] = []
    for j, idxs in enumerate(routed):
        if not idxs:
            per.append(0.0)
            continue
        seq = ItemSequence(tuple(instance.items[t][j] for t in idxs))
        per.append(
            expected_packed_exact(seq, cdf, capacity=instance.capacities[j]).expected_packed
        )
    return MultiExpectation(
        expected_total=float(sum(per)), per_knapsack=tuple(per), routed_sets=routed
    )


def per_knapsack_opt_plus(instance: MultiInstance) -> tuple[Number, ...]:
    """min(routed mass, B_j) per knapsack: what a truncating router would earn."""
    routed = route_greedy(instance)
    out = []
    for j, idxs in enumerate(routed):
        total = sum(instance.items[t][j] for t in idxs)
        out.append(min(total, instance.capacities[j]))
    return tuple(out)


def guarantee_check(instance: MultiInstance, cdf: ThresholdCdf) -> GuaranteeReport:
    """Expected total of the combined policy against the exact multi optimum."""
    expected = expected_combined(instance, cdf).expected_total
    opt = float(opt_multi(instance).value)
    return GuaranteeReport(
        expected_total=expected,
        opt=opt,
        ratio=expected / opt if opt > 0 else 1.0,
    )
