import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from knapthresh.core import ItemSequence, packed_value, simulate_greedy
from knapthresh.evaluation import (
    bound_certificate,
    competitive_report,
    expected_packed_exact,
    expected_packed_mc,
)
from knapthresh.optimum import opt_integer, opt_plus
from knapthresh.thresholds import cdf_f1, cdf_f2, fixed_threshold_cdf, solve_constants

sizes_strategy = st.lists(
    st.floats(min_value=1e-6, max_value=1.0, allow_nan=False), min_size=1, max_size=20
)


class TestExpectedExact:
    def test_two_item_plateau(self):
        rep = expected_packed_exact(ItemSequence((0.5, 0.6)), cdf_f1())
        assert rep.expected_packed == pytest.approx(0.5, abs=1e-12)

    def test_tiny_then_full_matches_closed_form(self):
        eps = 1e-3
        f1 = cdf_f1()
        rep = expected_packed_exact(ItemSequence((eps, 1.0)), f1)
        closed = f1.eval(eps) * eps + (1 - f1.eval(eps)) * 1.0
        assert rep.expected_packed == pytest.approx(closed, abs=1e-12)
        assert rep.expected_packed == pytest.approx(3 / 7, abs=5e-3)

    def test_single_item_below_support_top(self):
        f1 = cdf_f1()
        rep = expected_packed_exact(ItemSequence((0.3,)), f1)
        assert rep.expected_packed == pytest.approx(f1.eval(0.3) * 0.3, abs=1e-12)

    def test_masses_sum_to_one(self):
        rep = expected_packed_exact(ItemSequence((0.2, 0.9, 0.5)), cdf_f2())
        assert sum(c.mass for c in rep.breakpoints) == pytest.approx(1.0, abs=1e-9)
        assert rep.expected_packed == pytest.approx(
            sum(c.mass * c.packed for c in rep.breakpoints), abs=1e-12
        )

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            expected_packed_exact(ItemSequence(()), cdf_f1())

    def test_integer_mode_uses_exact_breakpoints(self):
        seq = ItemSequence((3, 10, 7), capacity=10)
        f1 = cdf_f1()
        rep = expected_packed_exact(seq, f1)
        # brute-force the expectation from the CDF cells directly
        cuts = [Fraction(3, 10), Fraction(7, 10), Fraction(1)]
        masses = [f1.eval(0)] + [
            f1.eval(float(b)) - f1.eval(float(a))
            for a, b in zip([0] + cuts[:-1], cuts)
        ]
        values = [float(packed_value(seq, t)) for t in [0] + cuts]
        assert rep.expected_packed == pytest.approx(
            sum(m * v for m, v in zip(masses, values)), abs=1e-12
        )

    @given(sizes_strategy)
    def test_degenerate_cdf_reproduces_plain_simulation(self, sizes):
        seq = ItemSequence(tuple(sizes))
        for tau in (0.0, 0.25, 0.7):
            rep = expected_packed_exact(seq, fixed_threshold_cdf(tau))
            assert rep.expected_packed == pytest.approx(
                float(packed_value(seq, tau)), abs=1e-9
            )


class TestExpectedMonteCarlo:
    def test_zero_variance_case(self):
        rep = expected_packed_mc(ItemSequence((0.5, 0.6)), cdf_f1(), 10_000, seed=1)
        assert rep.expected_packed == 0.5
        assert rep.std_error == 0.0

    def test_single_item_within_four_sigma(self):
        f1 = cdf_f1()
        seq = ItemSequence((0.3,))
        exact = expected_packed_exact(seq, f1).expected_packed
        rep = expected_packed_mc(seq, f1, 100_000, seed=2)
        assert abs(rep.expected_packed - exact) <= 4 * max(rep.std_error, 1e-12)

    def test_all_mass_at_zero_gives_greedy(self):
        seq = ItemSequence((0.4, 0.5, 0.3))
        rep = expected_packed_mc(seq, fixed_threshold_cdf(0.0), 100, seed=3)
        assert rep.expected_packed == pytest.approx(
            float(simulate_greedy(seq).packed_total)
        )

    def test_exact_vs_mc_on_random_pairs(self, rng):
        for trial in range(100):
            n = int(rng.integers(1, 12))
            seq = ItemSequence(tuple(float(s) for s in 1.0 - rng.random(n)))
            cdf = cdf_f1() if trial % 2 else cdf_f2()
            exact = expected_packed_exact(seq, cdf).expected_packed
            mc = expected_packed_mc(seq, cdf, 4000, seed=trial)
            assert abs(mc.expected_packed - exact) <= 4 * max(mc.std_error, 1e-9)

    def test_sample_count_validation(self):
        with pytest.raises(ValueError):
            expected_packed_mc(ItemSequence((0.5,)), cdf_f1(), 0, seed=1)


class TestCompetitiveReport:
    def test_plateau_ratio(self):
        report = competitive_report(ItemSequence((0.5, 0.6)), cdf_f1())
        assert report.ratio_vs_opt_plus == pytest.approx(0.5)
        assert report.ratio_vs_opt_plus >= 3 / 7

    def test_full_item_under_f2(self):
        report = competitive_report(ItemSequence((1.0,)), cdf_f2())
        assert report.ratio_vs_opt == pytest.approx(1.0)

    def test_classic_hard_instance_under_f2(self):
        consts = solve_constants()
        report = competitive_report(ItemSequence((1e-3, 1.0)), cdf_f2())
        assert report.ratio_vs_opt >= consts.c_star - 1e-9


class TestBoundCertificate:
    def test_large_m_certificate(self):
        cert = bound_certificate(ItemSequence((0.5, 0.6)), cdf_f1())
        assert cert.m == pytest.approx(0.6)
        assert cert.q == pytest.approx(0.5)
        assert cert.bound_large_m == pytest.approx(0.5, abs=1e-12)
        assert cert.applicable_bound == cert.bound_large_m
        assert cert.holds

    def test_q_scan_stops_at_largest_blocking_threshold(self):
        cert = bound_certificate(ItemSequence((0.4, 0.9, 0.8)), cdf_f1())
        assert cert.m == pytest.approx(0.8)
        assert cert.q == pytest.approx(0.4)
        assert cert.nq_plus_x == pytest.approx(0.4)

    def test_small_m_branch(self):
        cert = bound_certificate(ItemSequence((0.3, 0.3, 0.45)), cdf_f1())
        assert cert.m == pytest.approx(0.45)
        assert cert.m < 0.5
        assert cert.applicable_bound == cert.bound_small_m
        assert cert.holds

    def test_greedy_optimal_precondition(self):
        with pytest.raises(ValueError):
            bound_certificate(ItemSequence((0.3, 0.3)), cdf_f1())

    def test_oversized_blocked_item_rejected(self):
        seq = ItemSequence((5, 300), capacity=100)
        with pytest.raises(ValueError):
            bound_certificate(seq, cdf_f1())

    def test_q_maximality(self, rng):
        # above q the blocking inequality must fail: m + mass(sizes > q) <= 1
        for _ in range(200):
            n = int(rng.integers(2, 15))
            seq = ItemSequence(tuple(float(s) for s in 1.0 - rng.random(n)))
            if not simulate_greedy(seq).blocked_indices:
                continue
            cert = bound_certificate(seq, cdf_f1())
            above = sum(s for s in cert_gprime_sizes(seq) if s > cert.q)
            assert cert.m + cert.nq_plus_x > 1 - 1e-12
            assert cert.m + above <= 1 + 1e-12

    def test_certificates_hold_for_f1_on_random_suite(self, rng):
        checked = 0
        for _ in range(500):
            n = int(rng.integers(1, 25))
            seq = ItemSequence(tuple(float(s) for s in 1.0 - rng.random(n)))
            if not simulate_greedy(seq).blocked_indices:
                continue
            checked += 1
            assert bound_certificate(seq, cdf_f1()).holds
        assert checked > 100

    def test_small_m_certificates_hold_for_f2(self, rng):
        for _ in range(300):
            n = int(rng.integers(2, 25))
            seq = ItemSequence(tuple(float(s) for s in 0.5 * (1.0 - rng.random(n))))
            greedy = simulate_greedy(seq)
            if not greedy.blocked_indices:
                continue
            cert = bound_certificate(seq, cdf_f2())
            if cert.m < 0.5:
                assert cert.holds


def cert_gprime_sizes(seq):
    from knapthresh.core import classify_items

    info = classify_items(seq, simulate_greedy(seq))
    return [seq.sizes[i] for i in info.gprime_indices]


class TestGuaranteesOnSuites:
    @given(sizes_strategy)
    def test_f1_three_sevenths_vs_fractional(self, sizes):
        seq = ItemSequence(tuple(sizes))
        expected = expected_packed_exact(seq, cdf_f1()).expected_packed
        assert expected >= (3 / 7) * float(opt_plus(seq).value) - 1e-9

    @given(
        st.lists(st.integers(min_value=1, max_value=1000), min_size=1, max_size=18),
        st.integers(min_value=2, max_value=1000),
    )
    def test_f2_cstar_vs_integer(self, units, denom):
        units = [min(u, denom) for u in units]
        seq = ItemSequence(tuple(units), capacity=denom)
        c_star = solve_constants().c_star
        expected = expected_packed_exact(seq, cdf_f2()).expected_packed
        opt = int(opt_integer(seq).value)
        assert expected >= c_star * opt - 1e-9 * denom
