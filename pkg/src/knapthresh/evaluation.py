"""Expected packing of a random-threshold policy, plus bound certificates.

For a fixed sequence, the map tau -> THR(tau) packing is piecewise
constant: admission compares ``size >= tau``, so the packing can only
change when tau crosses a distinct item size.  Partitioning [0, 1] at
those sizes and weighting each cell by its CDF mass therefore gives the
expectation *exactly*, up to CDF evaluation error.  A Monte Carlo
evaluator exists as the independent cross-check.

The bound certificate re-derives, per sequence, the two analytic lower
bounds the guarantee proofs rest on (one for a small minimum blocked
size, one for a large minimum blocked size) and checks the exact
expectation clears the applicable one.  Certificates are diagnostics:
a failing certificate is a test signal, not an evaluator error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .core import (
    ItemSequence,
    Number,
    _is_exact,
    _resolve_capacity,
    classify_items,
    packed_value,
    simulate_greedy,
    simulate_two_bins,
)
from .optimum import opt_integer, opt_plus
from .thresholds import ThresholdCdf, sample_many


@dataclass(frozen=True)
class BreakpointCell:
    """One constant piece of the tau -> packing map: tau in (lo, hi]."""

    lo: float
    hi: float
    packed: float
    mass: float


@dataclass(frozen=True)
class ExpectationReport:
    expected_packed: float
    breakpoints: tuple[BreakpointCell, ...]
    method: str
    samples: Optional[int] = None
    std_error: Optional[float] = None


@dataclass(frozen=True)
class CompetitiveReport:
    expected_packed: float
    opt_plus: float
    opt: float
    ratio_vs_opt_plus: float
    ratio_vs_opt: float


@dataclass(frozen=True)
class BoundCertificate:
    """Analytic lower-bound check for one (sequence, CDF) pair.

    All quantities are normalized by the capacity.  ``m`` is the smallest
    greedy-blocked size, ``q`` the largest threshold at which the size-m
    item is still blocked by the surviving prefix, ``g_prime`` the greedy
    prefix total, and ``nq_plus_x`` the surviving prefix mass at q.
    ``holds`` compares the exact expectation against whichever bound
    applies (m < 1/2 vs m >= 1/2) with 1e-9 slack.
    """

    m: float
    q: float
    g_prime: float
    nq_plus_x: float
    bound_small_m: float
    bound_large_m: float
    applicable_bound: float
    expected_packed: float
    holds: bool


def _threshold_grid(seq: ItemSequence, cap: Number) -> list:
    """Distinct normalized sizes <= 1, ascending; exact Fractions in integer mode."""
    if seq.is_integer_mode:
        vals = {Fraction(s, cap) for s in seq.sizes if s <= cap}
    else:
        vals = {s / cap for s in seq.sizes if s <= cap}
    return sorted(vals)


def expected_packed_exact(
    seq: ItemSequence, cdf: ThresholdCdf, capacity: Number | None = None
) -> ExpectationReport:
    """Exact expectation of the packed total under a random threshold.

    Each cell (a, b] between consecutive distinct sizes is simulated at
    its right endpoint (the admission rule is >=, so the packing is
    constant there) and weighted by F(b) - F(a); the atom at zero
    contributes F(0) times the greedy value.
    """
    if len(seq) == 0:
        raise ValueError("sequence must be nonempty")
    cap = _resolve_capacity(seq, capacity)
    grid = _threshold_grid(seq, cap)

    cells = [
        BreakpointCell(
            lo=0.0, hi=0.0, packed=float(packed_value(seq, 0, cap)), mass=cdf.eval(0)
        )
    ]
    prev = 0.0
    prev_mass = cdf.eval(0)
    for b in grid:
        hi_mass = cdf.eval(float(b))
        cells.append(
            BreakpointCell(
                lo=float(prev),
                hi=float(b),
                packed=float(packed_value(seq, b, cap)),
                mass=hi_mass - prev_mass,
            )
        )
        prev, prev_mass = b, hi_mass
    if float(prev) < 1.0:
        one = Fraction(1) if seq.is_integer_mode else 1.0
        cells.append(
            BreakpointCell(
                lo=float(prev),
                hi=1.0,
                packed=float(packed_value(seq, one, cap)),
                mass=1.0 - prev_mass,
            )
        )
    expected = math.fsum(c.packed * c.mass for c in cells)
    return ExpectationReport(
        expected_packed=expected, breakpoints=tuple(cells), method="exact"
    )


def expected_packed_mc(
    seq: ItemSequence,
    cdf: ThresholdCdf,
    n_samples: int,
    seed: int,
    capacity: Number | None = None,
) -> ExpectationReport:
    """Monte Carlo estimate over n_samples independent threshold draws."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    cap = _resolve_capacity(seq, capacity)
    rng = np.random.default_rng(seed)
    taus = sample_many(cdf, n_samples, rng)
    values = np.fromiter(
        (float(packed_value(seq, float(t), cap)) for t in taus),
        dtype=float,
        count=n_samples,
    )
    std_error = float(values.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return ExpectationReport(
        expected_packed=float(values.mean()),
        breakpoints=(),
        method="monte_carlo",
        samples=n_samples,
        std_error=std_error,
    )


def competitive_report(
    seq: ItemSequence, cdf: ThresholdCdf, capacity: Number | None = None
) -> CompetitiveReport:
    """Exact expectation divided by both offline optima.

    Propagates the size errors of the integer oracle; a zero optimum
    (nothing fits) reports ratio 1.
    """
    cap = _resolve_capacity(seq, capacity)
    expected = expected_packed_exact(seq, cdf, cap).expected_packed
    plus = float(opt_plus(seq, cap).value)
    integer = float(opt_integer(seq, cap).value)
    return CompetitiveReport(
        expected_packed=expected,
        opt_plus=plus,
        opt=integer,
        ratio_vs_opt_plus=expected / plus if plus > 0 else 1.0,
        ratio_vs_opt=expected / integer if integer > 0 else 1.0,
    )


def bound_certificate(
    seq: ItemSequence, cdf: ThresholdCdf, capacity: Number | None = None
) -> BoundCertificate:
    """Compute the proof-bound certificate; requires a nonempty blocked set.

    The scan for q walks the distinct sizes of the greedy prefix in
    descending order (plus the empty-intersection sentinel) and keeps the
    largest threshold at which the size-m item would still be blocked.
    Strictness is exact for int/Fraction inputs and uses a 1e-12 margin
    in float mode.
    """
    cap = _resolve_capacity(seq, capacity)
    greedy = simulate_greedy(seq, cap)
    info = classify_items(seq, greedy, cap)
    if info.greedy_optimal:
        raise ValueError("certificate undefined: greedy packs every item")

    exact = seq.is_exact and _is_exact(cap)
    if seq.is_integer_mode:
        norm = lambda v: Fraction(v, cap)  # noqa: E731
    elif exact:
        norm = lambda v: Fraction(v) / Fraction(cap)  # noqa: E731
    else:
        norm = lambda v: v / cap  # noqa: E731

    m = norm(seq.sizes[info.t_m])
    if m > 1:
        raise ValueError(
            "certificate undefined: the smallest blocked item exceeds the capacity"
        )
    gprime_sizes = sorted((norm(seq.sizes[i]) for i in info.gprime_indices), reverse=True)
    g_prime = sum(gprime_sizes, start=Fraction(0) if exact else 0.0)

    margin = 0 if exact else 1e-12
    q = None
    running = Fraction(0) if exact else 0.0
    idx = 0
    # Candidates descend; `running` is the prefix mass of sizes >= candidate.
    for cand in [math.inf] + sorted(set(gprime_sizes), reverse=True):
        while idx < len(gprime_sizes) and gprime_sizes[idx] >= cand:
            running += gprime_sizes[idx]
            idx += 1
        if m + running > 1 + margin:
            q = cand
            intersection = running
            break
    if q is None or q is math.inf:
        raise ValueError(
            "certificate undefined: no admissible threshold blocks the size-m item"
        )

    f0 = cdf.eval(0)
    fm = cdf.eval(float(m))
    fq = cdf.eval(float(q))
    m_f, q_f = float(m), float(q)
    bound_small = f0 * (1 - m_f) + (fm - f0) * min(m_f, 1 - m_f)
    bound_large = fq * q_f + (1 - fq) * (1 - q_f)
    applicable = bound_small if m_f < 0.5 else bound_large

    expected = expected_packed_exact(seq, cdf, cap).expected_packed / float(cap)
    return BoundCertificate(
        m=m_f,
        q=q_f,
        g_prime=float(g_prime),
        nq_plus_x=float(intersection),
        bound_small_m=bound_small,
        bound_large_m=bound_large,
        applicable_bound=applicable,
        expected_packed=expected,
        holds=expected >= applicable - 1e-9,
    )


def two_bins_expected(seq: ItemSequence, capacity: Number | None = None) -> float:
    """Exact expectation of the fair-coin two-phase policy."""
    return float(simulate_two_bins(seq, capacity).expected_packed)
