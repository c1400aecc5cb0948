"""Threshold distributions: the two production CDFs, their constants, and sampling.

A threshold CDF is an atom at zero plus piecewise closed-form parts.  Two
distributions matter here:

* ``cdf_f1``   -- atom 4/7 at zero, then (4/7 - x) / (1 - 2x) up to 3/7.
  Drawing a threshold from it guarantees a 3/7 fraction of the fractional
  offline optimum.
* ``cdf_f2``   -- atom 1 - c* at zero, a logarithmic piece up to q*, and a
  hyperbolic piece with support all the way to 1.  Guarantees a c* ~ 0.432
  fraction of the integer offline optimum.

The constants (q*, c*) come from a one-dimensional root: q* solves
``2q^3 - 7q^2 + 5q - 1 - 2(1-q) q^2 ln(1-q) = 0`` and c* is then the
unique value making the two CDF pieces meet continuously at q*, i.e. the
root in c of the bivariate function

    H(c, x) = (1 - 2c)/x - (1 - 2c) ln(1-x)/(1 - 2x) - (1 - c),

which is affine in c, so c* has a closed form once q* is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

_BISECT_TOL = 1e-12


class SolverError(RuntimeError):
    """Root bracketing or post-conditions of the constants solver failed."""


def h_residual(c: float, x: float) -> float:
    """H(c, x); zero exactly when the two-piece CDF is continuous at x."""
    return (1 - 2 * c) / x - (1 - 2 * c) * math.log(1 - x) / (1 - 2 * x) - (1 - c)


def qstar_equation(q: float) -> float:
    """Stationarity residual whose root in (0.25, 0.45) is q*."""
    return 2 * q**3 - 7 * q**2 + 5 * q - 1 - 2 * (1 - q) * q**2 * math.log(1 - q)


@dataclass(frozen=True)
class SolvedConstants:
    q_star: float
    c_star: float
    f2_at_qstar: float


@lru_cache(maxsize=None)
def solve_constants(tol: float = 1e-12) -> SolvedConstants:
    """Bisect q* out of its bracket, then read c* off in closed form.

    Raises SolverError if the bracket does not change sign or the solved
    pair fails its own consistency checks.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    lo, hi = 0.25, 0.45
    f_lo = qstar_equation(lo)
    if f_lo * qstar_equation(hi) > 0:
        raise SolverError("no sign change for q* in (0.25, 0.45)")
    while True:
        mid = 0.5 * (lo + hi)
        f_mid = qstar_equation(mid)
        if abs(f_mid) <= tol or hi - lo <= 4 * math.ulp(mid):
            q = mid
            break
        if f_lo * f_mid <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid

    # H(c, q) = (A - 1) - c (2A - 1) with A = 1/q - ln(1-q)/(1-2q).
    a = 1 / q - math.log(1 - q) / (1 - 2 * q)
    c = (a - 1) / (2 * a - 1)
    f2q = (1 - c) - (1 - 2 * c) * math.log(1 - q) / (1 - 2 * q)

    if not 0 < q < 0.5 or not 0.4 < c < 0.5:
        raise SolverError(f"solved constants out of range: q*={q}, c*={c}")
    if abs(h_residual(c, q)) > 1e-10:
        raise SolverError("H(c*, q*) residual exceeds 1e-10")
    return SolvedConstants(q_star=q, c_star=c, f2_at_qstar=f2q)


@dataclass(frozen=True)
class CdfPiece:
    """Monotone evaluator on the half-open interval (lo, hi].

    ``fn`` must accept scalars and numpy arrays alike.  ``inv`` is an
    optional closed-form inverse used by the quantile; pieces without one
    fall back to bisection.
    """

    lo: float
    hi: float
    fn: Callable
    inv: Callable | None = None


@dataclass(frozen=True)
class ThresholdCdf:
    """Atom at zero plus piecewise-continuous parts covering (0, 1]."""

    atom_at_zero: float
    pieces: tuple[CdfPiece, ...]
    support_max: float
    label: str = ""

    def eval(self, x) -> float:
        """F(x) for x in [0, 1]; values past the last piece evaluate to 1."""
        x = float(x)
        if x < 0:
            raise ValueError(f"CDF argument must be >= 0, got {x}")
        if x == 0:
            return self.atom_at_zero
        for piece in self.pieces:
            if x <= piece.hi:
                return float(piece.fn(x))
        return 1.0

    def interval_mass(self, lo, hi) -> float:
        """P(lo < tau <= hi)."""
        return self.eval(hi) - self.eval(lo)

    def quantile(self, p: float) -> float:
        return quantile(self, p)

    def sample(self, rng: np.random.Generator) -> float:
        return sample(self, rng)


@lru_cache(maxsize=None)
def cdf_f1() -> ThresholdCdf:
    """The 3/7-guarantee distribution: atom 4/7 at zero, support up to 3/7."""
    return ThresholdCdf(
        atom_at_zero=4 / 7,
        pieces=(
            CdfPiece(
                lo=0.0,
                hi=3 / 7,
                fn=lambda x: (4 / 7 - x) / (1 - 2 * x),
                inv=lambda p: (4 / 7 - p) / (1 - 2 * p),
            ),
        ),
        support_max=3 / 7,
        label="f1",
    )


@lru_cache(maxsize=None)
def _cached_f2(consts: SolvedConstants) -> ThresholdCdf:
    q, c = consts.q_star, consts.c_star
    return ThresholdCdf(
        atom_at_zero=1 - c,
        pieces=(
            CdfPiece(
                lo=0.0,
                hi=q,
                fn=lambda x: (1 - c) - (1 - 2 * c) * np.log(1 - x) / (1 - 2 * x),
            ),
            CdfPiece(
                lo=q,
                hi=1.0,
                fn=lambda x: 2 * (1 - c) - (1 - 2 * c) / x,
                inv=lambda p: (1 - 2 * c) / (2 * (1 - c) - p),
            ),
        ),
        support_max=1.0,
        label="f2",
    )


def cdf_f2(consts: SolvedConstants | None = None) -> ThresholdCdf:
    """The c*-guarantee distribution: atom 1 - c* at zero, support all of (0, 1].

    The left piece would have a removable singularity at x = 1/2, but its
    domain ends at q* < 1/2, so evaluation never reaches it.
    """
    return _cached_f2(consts if consts is not None else solve_constants())


def fixed_threshold_cdf(tau: float) -> ThresholdCdf:
    """Degenerate distribution: the whole mass sits on a single threshold."""
    tau = float(tau)
    if not 0 <= tau <= 1:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if tau == 0:
        return ThresholdCdf(atom_at_zero=1.0, pieces=(), support_max=0.0, label="greedy")
    return ThresholdCdf(
        atom_at_zero=0.0,
        pieces=(
            CdfPiece(
                lo=0.0,
                hi=1.0,
                fn=lambda x: np.where(np.asarray(x) >= tau, 1.0, 0.0),
                inv=lambda p: np.where(np.asarray(p) > 0, tau, 0.0),
            ),
        ),
        support_max=tau,
        label=f"fixed:{tau:g}",
    )


def quantile(cdf: ThresholdCdf, p: float) -> float:
    """Generalized inverse inf{x : F(x) >= p}; the atom maps p <= F(0) to 0."""
    p = float(p)
    if not 0 <= p <= 1:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    if p <= cdf.atom_at_zero:
        return 0.0
    for piece in cdf.pieces:
        if p <= float(piece.fn(piece.hi)):
            if piece.inv is not None:
                return float(piece.inv(p))
            lo, hi = piece.lo, piece.hi
            while hi - lo > _BISECT_TOL:
                mid = 0.5 * (lo + hi)
                if float(piece.fn(mid)) >= p:
                    hi = mid
                else:
                    lo = mid
            return hi
    return cdf.support_max


def sample(cdf: ThresholdCdf, rng: np.random.Generator) -> float:
    """One inverse-transform draw from a caller-owned random stream."""
    return quantile(cdf, float(rng.random()))


def sample_many(cdf: ThresholdCdf, n: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized inverse-transform sampling; same law as ``sample``."""
    if n < 0:
        raise ValueError(f"sample count must be >= 0, got {n}")
    u = rng.random(n)
    out = np.zeros(n)
    assigned = u <= cdf.atom_at_zero
    lo_level = cdf.atom_at_zero
    for piece in cdf.pieces:
        hi_level = float(piece.fn(piece.hi))
        sel = ~assigned & (u <= hi_level)
        if sel.any():
            ps = u[sel]
            if piece.inv is not None:
                out[sel] = piece.inv(ps)
            else:
                lo = np.full(ps.shape, piece.lo)
                hi = np.full(ps.shape, piece.hi)
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    ge = piece.fn(mid) >= ps
                    hi = np.where(ge, mid, hi)
                    lo = np.where(ge, lo, mid)
                out[sel] = hi
            assigned |= sel
        lo_level = hi_level
    out[~assigned] = cdf.support_max
    return out


def percentile_grid(cdf: ThresholdCdf, k: int) -> tuple[float, ...]:
    """k evenly spaced quantiles F^{-1}(i / (k-1)), i = 0..k-1; k=1 gives (0,)."""
    if k < 1:
        raise ValueError(f"percentile count must be >= 1, got {k}")
    if k == 1:
        return (quantile(cdf, 0.0),)
    return tuple(quantile(cdf, i / (k - 1)) for i in range(k))
