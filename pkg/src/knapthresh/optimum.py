"""Offline optimum oracles: fractional, integer subset-sum, and multi-knapsack.

The fractional optimum may truncate items, so it is simply
``min(sum of sizes, capacity)``.  The integer optimum is an exact subset
sum: a reachability table over capacity units in integer mode, and a
meet-in-the-middle enumeration for short fraction-mode sequences.  The
multi-knapsack optimum is a pruned exhaustive search over assignments.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ItemSequence, Number, _resolve_capacity

CAPACITY_UNIT_LIMIT = 10**7
BRUTE_FORCE_ITEM_LIMIT = 24
MULTI_ITEM_LIMIT = 10
MULTI_KNAPSACK_LIMIT = 5


class SizeLimitError(ValueError):
    """Instance exceeds what the exact oracle is willing to enumerate."""


@dataclass(frozen=True)
class OptResult:
    value: Number
    witness: tuple[int, ...]
    method: str
    assignment: Optional[tuple[Optional[int], ...]] = None


def opt_plus(seq: ItemSequence, capacity: Number | None = None) -> OptResult:
    """Best packing when items may be truncated: min(total size, capacity)."""
    cap = _resolve_capacity(seq, capacity)
    total = seq.total
    return OptResult(value=min(total, cap), witness=(), method="closed_form")


def _subset_sum_units(sizes: tuple[int, ...], cap: int) -> tuple[int, tuple[int, ...]]:
    """Max subset sum <= cap over positive ints, with witness reconstruction.

    One boolean reachability row plus, per unit value, the index of the
    item that first made it reachable; backtracking then never reuses an
    item because recorded indices strictly decrease.
    """
    reach = np.zeros(cap + 1, dtype=bool)
    reach[0] = True
    first_maker = np.full(cap + 1, -1, dtype=np.int64)
    for i, s in enumerate(sizes):
        if not 0 < s <= cap:
            continue
        prev = reach[: cap + 1 - s].copy()
        newly = prev & ~reach[s:]
        if newly.any():
            first_maker[s:][newly] = i
        reach[s:] |= prev
    best = int(np.flatnonzero(reach)[-1])
    witness: list[int] = []
    left = best
    while left > 0:
        i = int(first_maker[left])
        witness.append(i)
        left -= sizes[i]
    witness.reverse()
    return best, tuple(witness)


def _half_sums(sizes: tuple[Number, ...], indices: range) -> list[tuple[Number, int]]:
    sums: list[tuple[Number, int]] = [(0, 0)]
    for i in indices:
        s = sizes[i]
        sums += [(val + s, mask | (1 << i)) for val, mask in sums]
    return sums


def _subset_sum_brute(
    sizes: tuple[Number, ...], cap: Number
) -> tuple[Number, tuple[int, ...]]:
    """Meet-in-the-middle max subset sum <= cap; exact for Fraction sizes."""
    n = len(sizes)
    half = n // 2
    left = [(v, m) for v, m in _half_sums(sizes, range(half)) if v <= cap]
    right = sorted((v, m) for v, m in _half_sums(sizes, range(half, n)) if v <= cap)
    right_vals = [v for v, _ in right]
    best_val: Number = -1
    best_mask = 0
    for v, m in left:
        j = bisect_right(right_vals, cap - v) - 1
        if j >= 0 and v + right_vals[j] > best_val:
            best_val = v + right_vals[j]
            best_mask = m | right[j][1]
    witness = tuple(i for i in range(n) if best_mask >> i & 1)
    return best_val, witness


def opt_integer(seq: ItemSequence, capacity: Number | None = None) -> OptResult:
    """Best packing without truncation: exact max subset sum <= capacity.

    Integer-unit sequences go through the reachability table; fraction
    mode falls back to meet-in-the-middle enumeration and refuses more
    than 24 items.
    """
    cap = _resolve_capacity(seq, capacity)
    if seq.is_integer_mode:
        if not isinstance(cap, int):
            raise ValueError(f"integer-mode capacity must be an int, got {cap!r}")
        if cap > CAPACITY_UNIT_LIMIT:
            raise SizeLimitError(
                f"capacity {cap} exceeds the {CAPACITY_UNIT_LIMIT}-unit table limit"
            )
        value, witness = _subset_sum_units(seq.sizes, cap)
        return OptResult(value=value, witness=witness, method="dp")
    if len(seq) > BRUTE_FORCE_ITEM_LIMIT:
        raise SizeLimitError(
            f"fraction-mode optimum enumerates at most {BRUTE_FORCE_ITEM_LIMIT} items "
            f"(got {len(seq)}); rescale to integer units instead"
        )
    value, witness = _subset_sum_brute(seq.sizes, cap)
    return OptResult(value=value, witness=witness, method="brute_force")


def opt_multi(instance) -> OptResult:
    """Exhaustive multi-knapsack optimum with branch-and-bound pruning.

    ``instance`` is a ``multiknapsack.MultiInstance``.  Every item either
    goes whole into one knapsack where it fits or is rejected; the value
    is the total size placed.  Refuses instances beyond 10 items or 5
    knapsacks.
    """
    caps = instance.capacities
    items = instance.items
    n_items, n_knap = len(items), len(caps)
    if n_items > MULTI_ITEM_LIMIT or n_knap > MULTI_KNAPSACK_LIMIT:
        raise SizeLimitError(
            f"multi-knapsack optimum limited to {MULTI_ITEM_LIMIT} items and "
            f"{MULTI_KNAPSACK_LIMIT} knapsacks, got T={n_items}, N={n_knap}"
        )

    suffix_best = [0] * (n_items + 1)
    for t in range(n_items - 1, -1, -1):
        suffix_best[t] = suffix_best[t + 1] + max(items[t])

    remaining = list(caps)
    assignment: list[Optional[int]] = [None] * n_items
    best_value: Number = 0
    best_assignment: tuple[Optional[int], ...] = tuple(assignment)

    def search(t: int, value: Number) -> None:
        nonlocal best_value, best_assignment
        if t == n_items:
            if value > best_value:
                best_value = value
                best_assignment = tuple(assignment)
            return
        if value + suffix_best[t] <= best_value:
            return
        sizes = items[t]
        for j in range(n_knap):
            s = sizes[j]
            if 0 < s <= remaining[j]:
                remaining[j] -= s
                assignment[t] = j
                search(t + 1, value + s)
                remaining[j] += s
                assignment[t] = None
        search(t + 1, value)

    search(0, 0)
    witness = tuple(t for t, j in enumerate(best_assignment) if j is not None)
    return OptResult(
        value=best_value,
        witness=witness,
        method="brute_force",
        assignment=best_assignment,
    )
