"""Single-knapsack arrival model and the deterministic packing policies.

An arrival stream is an ordered list of item sizes.  Sizes are either
fractions of a unit-capacity knapsack (floats or `fractions.Fraction`,
each in (0, 1]) or positive integer units packed against an integer
capacity.  Policies scan the stream once: an item whose size exceeds the
remaining capacity is *blocked*, an item that fits but fails the policy's
admission rule is *rejected*, and anything else is packed.  Blocked takes
precedence in the label; whether the admission rule would also have
refused the item is kept in a parallel flag.

All operations are pure functions of their inputs.  When every quantity
involved is an int or Fraction the arithmetic and comparisons are exact;
in float mode a fit test uses ``size <= remaining + 1e-12 * capacity`` and
the admission test gets a ``1e-9 * capacity`` slack so that ties induced
by float round-off always land on "accept".
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

Number = Union[int, float, Fraction]

ACCEPTED = "accepted"
REJECTED = "rejected"
BLOCKED = "blocked"

FIT_SLACK = 1e-12
ADMIT_SLACK = 1e-9


def _is_exact(value: object) -> bool:
    """True for types we can compare without float slack."""
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


@dataclass(frozen=True)
class ItemSequence:
    """Ordered stream of item sizes.

    ``capacity is None`` means fraction mode: sizes are dimensionless
    fractions of the knapsack, each in (0, 1].  Setting an integer
    ``capacity`` switches to integer-unit mode: sizes are positive ints
    and may exceed the capacity (such items can never fit).
    """

    sizes: tuple[Number, ...]
    capacity: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sizes", tuple(self.sizes))
        if self.capacity is None:
            for i, s in enumerate(self.sizes):
                if not 0 < s <= 1:
                    raise ValueError(
                        f"fraction-mode size at index {i} must be in (0, 1], got {s!r}"
                    )
        else:
            if not isinstance(self.capacity, int) or isinstance(self.capacity, bool):
                raise ValueError(f"integer-mode capacity must be an int, got {self.capacity!r}")
            if self.capacity < 1:
                raise ValueError(f"integer-mode capacity must be >= 1, got {self.capacity}")
            for i, s in enumerate(self.sizes):
                if not isinstance(s, int) or isinstance(s, bool) or s < 1:
                    raise ValueError(
                        f"integer-mode size at index {i} must be a positive int, got {s!r}"
                    )

    @classmethod
    def from_fractions(cls, sizes: Iterable[Number]) -> "ItemSequence":
        return cls(tuple(sizes))

    @classmethod
    def from_units(cls, sizes: Iterable[int], capacity: int) -> "ItemSequence":
        return cls(tuple(sizes), capacity=capacity)

    @property
    def is_integer_mode(self) -> bool:
        return self.capacity is not None

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(s) for s in self.sizes)

    @property
    def total(self) -> Number:
        return sum(self.sizes)

    def __len__(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class PackingOutcome:
    """Per-run trace of a single-knapsack policy.

    ``would_reject[i]`` is True whenever the admission rule refused item
    i, including blocked items that would also have been rejected.
    """

    accepted_indices: tuple[int, ...]
    packed_total: Number
    per_item_status: tuple[str, ...]
    would_reject: tuple[bool, ...]

    @property
    def blocked_indices(self) -> tuple[int, ...]:
        return tuple(i for i, st in enumerate(self.per_item_status) if st == BLOCKED)

    @property
    def rejected_indices(self) -> tuple[int, ...]:
        return tuple(i for i, st in enumerate(self.per_item_status) if st == REJECTED)


@dataclass(frozen=True)
class TwoBinsOutcome:
    """Both coin branches of the two-phase policy plus the exact mixture value."""

    heads: PackingOutcome
    tails: PackingOutcome
    expected_packed: Number


@dataclass(frozen=True)
class GreedyClassification:
    """Blocked-set summary of a greedy run.

    ``m`` is the smallest blocked size, ``t_m`` the first index at which
    an item of that size is blocked, and ``gprime_indices`` the items the
    greedy run had accepted strictly before that arrival.  When greedy
    accepts everything (``greedy_optimal``) the remaining fields are
    empty/None.
    """

    blocked_indices: tuple[int, ...]
    greedy_optimal: bool
    m: Number | None = None
    t_m: int | None = None
    gprime_indices: tuple[int, ...] = ()
    gprime_size: Number = 0


def _resolve_capacity(seq: ItemSequence, capacity: Number | None) -> Number:
    if capacity is not None:
        if capacity <= 0:
            raise ValueError(f"capacity must be positive, got {capacity!r}")
        return capacity
    return seq.capacity if seq.capacity is not None else 1


def _slacks(seq: ItemSequence, tau: Number, capacity: Number) -> tuple[Number, Number]:
    """(admit_slack, fit_slack); both zero when every operand is exact."""
    if seq.is_exact and _is_exact(tau) and _is_exact(capacity):
        return 0, 0
    scale = float(capacity)
    return ADMIT_SLACK * scale, FIT_SLACK * scale


def packed_value(seq: ItemSequence, tau: Number, capacity: Number | None = None) -> Number:
    """Total packed by THR(tau) on ``seq``; the fast path behind the expectation engine."""
    cap = _resolve_capacity(seq, capacity)
    admit_slack, fit_slack = _slacks(seq, tau, cap)
    cut = tau * cap - admit_slack
    remaining = cap
    limit = remaining + fit_slack
    for s in seq.sizes:
        if s >= cut and s <= limit:
            remaining -= s
            limit = remaining + fit_slack
    return cap - remaining


def simulate_fixed_threshold(
    seq: ItemSequence, tau: Number, capacity: Number | None = None
) -> PackingOutcome:
    """Run THR(tau): accept every fitting item of size >= tau * capacity.

    ``tau`` is a fraction of the capacity, in [0, 1].  THR(0) is greedy /
    first-come-first-serve.  An exact fit is a fit, and admission ties
    accept.
    """
    if not 0 <= tau <= 1:
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    cap = _resolve_capacity(seq, capacity)
    admit_slack, fit_slack = _slacks(seq, tau, cap)
    cut = tau * cap - admit_slack

    remaining = cap
    accepted: list[int] = []
    statuses: list[str] = []
    refusals: list[bool] = []
    for i, s in enumerate(seq.sizes):
        admitted = s >= cut
        if s > remaining + fit_slack:
            statuses.append(BLOCKED)
            refusals.append(not admitted)
        elif not admitted:
            statuses.append(REJECTED)
            refusals.append(True)
        else:
            statuses.append(ACCEPTED)
            refusals.append(False)
            accepted.append(i)
            remaining -= s
    return PackingOutcome(
        accepted_indices=tuple(accepted),
        packed_total=cap - remaining,
        per_item_status=tuple(statuses),
        would_reject=tuple(refusals),
    )


def simulate_greedy(seq: ItemSequence, capacity: Number | None = None) -> PackingOutcome:
    """THR(0): accept anything that fits, in arrival order."""
    return simulate_fixed_threshold(seq, 0, capacity)


def simulate_two_bins(seq: ItemSequence, capacity: Number | None = None) -> TwoBinsOutcome:
    """Fair-coin mixture of greedy and skip-until-greedy-first-blocks.

    Heads runs greedy.  Tails maintains a shadow greedy, rejects every
    item the shadow still fits, and from the first shadow-blocked item
    onward (inclusive) runs greedy on a fresh knapsack.  If the shadow
    never blocks, tails packs nothing.  The coin is the only randomness,
    so the expectation (heads + tails) / 2 is exact.
    """
    cap = _resolve_capacity(seq, capacity)
    heads = simulate_greedy(seq, cap)

    _, fit_slack = _slacks(seq, 0, cap)
    shadow_remaining = cap
    remaining = cap
    switched = False
    accepted: list[int] = []
    statuses: list[str] = []
    refusals: list[bool] = []
    for i, s in enumerate(seq.sizes):
        if not switched:
            if s <= shadow_remaining + fit_slack:
                shadow_remaining -= s
                statuses.append(REJECTED)
                refusals.append(True)
                continue
            switched = True
        if s > remaining + fit_slack:
            statuses.append(BLOCKED)
            refusals.append(False)
        else:
            statuses.append(ACCEPTED)
            refusals.append(False)
            accepted.append(i)
            remaining -= s
    tails = PackingOutcome(
        accepted_indices=tuple(accepted),
        packed_total=cap - remaining,
        per_item_status=tuple(statuses),
        would_reject=tuple(refusals),
    )
    expected = (heads.packed_total + tails.packed_total) / 2
    return TwoBinsOutcome(heads=heads, tails=tails, expected_packed=expected)


def classify_items(
    seq: ItemSequence, outcome: PackingOutcome, capacity: Number | None = None
) -> GreedyClassification:
    """Summarize the blocked set of a greedy run.

    ``outcome`` must be the greedy (THR(0)) outcome for ``seq``; anything
    else raises.  Returns the blocked set, its minimum size m, the first
    index where an item of size m is blocked, and the items greedy had
    accepted strictly before that arrival.
    """
    replay = simulate_greedy(seq, capacity)
    if (
        replay.per_item_status != outcome.per_item_status
        or replay.accepted_indices != outcome.accepted_indices
    ):
        raise ValueError("outcome does not match a greedy run of this sequence")

    blocked = outcome.blocked_indices
    if not blocked:
        return GreedyClassification(blocked_indices=(), greedy_optimal=True)
    m = min(seq.sizes[i] for i in blocked)
    t_m = next(i for i in blocked if seq.sizes[i] == m)
    gprime = tuple(i for i in outcome.accepted_indices if i < t_m)
    return GreedyClassification(
        blocked_indices=blocked,
        greedy_optimal=False,
        m=m,
        t_m=t_m,
        gprime_indices=gprime,
        gprime_size=sum(seq.sizes[i] for i in gprime),
    )
