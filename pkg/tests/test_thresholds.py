import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from knapthresh.thresholds import (
    cdf_f1,
    cdf_f2,
    fixed_threshold_cdf,
    h_residual,
    percentile_grid,
    qstar_equation,
    quantile,
    sample,
    sample_many,
    solve_constants,
)


class TestSolveConstants:
    def test_matches_published_approximations(self):
        consts = solve_constants(1e-12)
        assert consts.q_star == pytest.approx(0.31847, abs=5e-5)
        assert consts.c_star == pytest.approx(0.43236, abs=5e-5)

    def test_residuals_vanish(self):
        consts = solve_constants(1e-12)
        assert abs(qstar_equation(consts.q_star)) <= 1e-10
        assert abs(h_residual(consts.c_star, consts.q_star)) <= 1e-10

    def test_f2_at_qstar_matches_direct_evaluation(self):
        consts = solve_constants(1e-12)
        q, c = consts.q_star, consts.c_star
        direct = (1 - c) - (1 - 2 * c) * math.log(1 - q) / (1 - 2 * q)
        assert consts.f2_at_qstar == pytest.approx(direct, abs=1e-12)
        assert consts.f2_at_qstar == pytest.approx(0.71050, abs=5e-5)

    def test_qstar_is_the_h_minimizer_on_a_grid(self):
        consts = solve_constants(1e-12)
        grid = np.linspace(1e-4, 0.5 - 1e-4, 10_000)
        values = [h_residual(consts.c_star, q) for q in grid]
        assert min(values) >= -1e-10

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            solve_constants(-1.0)


class TestF1:
    def test_atom_and_boundary(self):
        f1 = cdf_f1()
        assert f1.eval(0) == pytest.approx(4 / 7, abs=1e-12)
        assert f1.eval(3 / 7) == pytest.approx(1.0, abs=1e-9)
        assert f1.eval(1.0) == 1.0

    def test_interior_value(self):
        assert cdf_f1().eval(1 / 7) == pytest.approx(0.6, abs=1e-12)

    def test_quantiles(self):
        f1 = cdf_f1()
        assert quantile(f1, 0.3) == 0.0
        assert quantile(f1, 0.6) == pytest.approx(1 / 7, abs=1e-12)
        assert quantile(f1, 1.0) == pytest.approx(3 / 7, abs=1e-12)

    def test_negative_argument_rejected(self):
        with pytest.raises(ValueError):
            cdf_f1().eval(-0.1)
        with pytest.raises(ValueError):
            quantile(cdf_f1(), 1.2)


class TestF2:
    def test_atom_and_top(self):
        consts = solve_constants()
        f2 = cdf_f2(consts)
        assert f2.eval(0) == pytest.approx(1 - consts.c_star, abs=1e-12)
        assert f2.eval(0) == pytest.approx(0.56764, abs=5e-5)
        assert f2.eval(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_continuity_at_qstar(self):
        consts = solve_constants()
        f2 = cdf_f2(consts)
        q = consts.q_star
        assert abs(f2.eval(q) - f2.eval(q + 1e-13)) <= 1e-9

    def test_right_piece_quantile_closed_form(self):
        consts = solve_constants()
        f2 = cdf_f2(consts)
        for p in (0.8, 0.9, 0.99, 1.0):
            x = quantile(f2, p)
            assert x > consts.q_star
            assert f2.eval(x) == pytest.approx(p, abs=1e-9)

    def test_left_piece_quantile_bisection(self):
        consts = solve_constants()
        f2 = cdf_f2(consts)
        for p in (0.6, 0.65, 0.70):
            x = quantile(f2, p)
            assert 0 < x <= consts.q_star
            assert f2.eval(x) == pytest.approx(p, abs=1e-9)


@pytest.mark.parametrize("make", [cdf_f1, cdf_f2])
class TestCdfLaws:
    def test_monotone_on_random_pairs(self, make, rng):
        cdf = make()
        xs = rng.random(10_000) * cdf.support_max
        ys = rng.random(10_000) * cdf.support_max
        lo = np.minimum(xs, ys)
        hi = np.maximum(xs, ys)
        for a, b in zip(lo, hi):
            assert cdf.eval(a) <= cdf.eval(b) + 1e-12

    def test_quantile_eval_round_trip(self, make, rng):
        cdf = make()
        for p in rng.random(300):
            x = quantile(cdf, p)
            assert cdf.eval(x) >= p - 1e-9
        for x in rng.random(300) * cdf.support_max:
            assert quantile(cdf, cdf.eval(x)) <= x + 1e-9

    def test_sampling_matches_cdf_in_ks_distance(self, make):
        cdf = make()
        rng = np.random.default_rng(20240817)
        n = 1_000_000
        xs = sample_many(cdf, n, rng)
        vals, counts = np.unique(xs, return_counts=True)
        cum_after = np.cumsum(counts) / n
        cum_before = cum_after - counts / n
        f_at = np.array([cdf.eval(v) for v in vals])
        f_left = f_at.copy()
        if vals[0] == 0.0:
            f_left[0] = 0.0  # the atom is the only point mass
        ks = max(np.abs(cum_after - f_at).max(), np.abs(cum_before - f_left).max())
        assert ks <= 0.005

    def test_atom_frequency(self, make):
        cdf = make()
        rng = np.random.default_rng(42)
        taus = sample_many(cdf, 1_000_000, rng)
        frac_zero = float((taus == 0).mean())
        assert frac_zero == pytest.approx(cdf.atom_at_zero, abs=2e-3)

    def test_support(self, make):
        cdf = make()
        rng = np.random.default_rng(7)
        taus = sample_many(cdf, 10_000, rng)
        assert float(taus.min()) >= 0.0
        assert float(taus.max()) <= cdf.support_max + 1e-9


class TestScalarSample:
    def test_scalar_sample_agrees_with_quantile(self):
        f1 = cdf_f1()
        rng_a = np.random.default_rng(5)
        rng_b = np.random.default_rng(5)
        draws = [sample(f1, rng_a) for _ in range(50)]
        expected = [quantile(f1, float(rng_b.random())) for _ in range(50)]
        assert draws == expected


class TestDegenerateCdf:
    def test_step_behavior(self):
        det = fixed_threshold_cdf(0.3)
        assert det.eval(0.29) == 0.0
        assert det.eval(0.3) == 1.0
        assert quantile(det, 0.5) == pytest.approx(0.3)

    def test_greedy_degenerate(self):
        det = fixed_threshold_cdf(0.0)
        assert det.eval(0) == 1.0
        assert quantile(det, 1.0) == 0.0


class TestPercentileGrid:
    def test_f1_21_percentiles(self):
        f1 = cdf_f1()
        grid = percentile_grid(f1, 21)
        assert len(grid) == 21
        # the atom 4/7 ~ 0.571 swallows every percentile up to 0.55
        for i, t in enumerate(grid):
            if i / 20 <= 0.55:
                assert t == 0.0
            else:
                assert t > 0.0
        assert grid[12] == pytest.approx(1 / 7, abs=1e-12)  # percentile 0.60
        assert grid[-1] == pytest.approx(3 / 7, abs=1e-12)

    def test_single_warehouse_degenerates_to_zero(self):
        assert percentile_grid(cdf_f1(), 1) == (0.0,)

    @given(st.integers(min_value=1, max_value=40))
    def test_grid_is_sorted(self, k):
        grid = percentile_grid(cdf_f1(), k)
        assert list(grid) == sorted(grid)
