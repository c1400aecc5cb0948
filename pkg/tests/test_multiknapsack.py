from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest

from knapthresh.adversarial import build_thm42, canonical_phase2_accepts
from knapthresh.core import ItemSequence
from knapthresh.evaluation import expected_packed_exact
from knapthresh.multiknapsack import (
    MultiInstance,
    expected_combined,
    guarantee_check,
    per_knapsack_opt_plus,
    route_greedy,
    simulate_combined,
)
from knapthresh.optimum import opt_multi, opt_plus
from knapthresh.thresholds import cdf_f1


def random_instance(rng, max_knap=3, max_items=8):
    n_knap = int(rng.integers(1, max_knap + 1))
    n_items = int(rng.integers(1, max_items + 1))
    caps = tuple(
        1.0 if rng.random() < 0.5 else float(rng.uniform(1.0, 2.0)) for _ in range(n_knap)
    )
    items = []
    for _ in range(n_items):
        vec = [float(s) for s in (1.0 - rng.random(n_knap))]
        for j in range(n_knap):
            if rng.random() < 0.2:
                vec[j] = 0.0
        items.append(tuple(vec))
    return MultiInstance(caps, tuple(items))


class TestRouting:
    def test_argmax_routing(self):
        inst = MultiInstance((1, 1), ((0.3, 0.7),))
        assert route_greedy(inst) == ((), (0,))

    def test_tie_breaks_to_lowest_index(self):
        inst = MultiInstance((1, 1), ((0.5, 0.5),))
        assert route_greedy(inst) == ((0,), ())

    def test_diagonal_items_route_to_their_knapsack(self):
        dist = build_thm42(4, 1e-3)
        inst = dist.branches[0].payload
        routed = route_greedy(inst)
        assert routed == ((0,), (1,), (2,), (3,))

    def test_all_zero_vector_is_unroutable(self):
        inst = MultiInstance((1, 1), ((0.0, 0.0), (0.2, 0.1)))
        routed = route_greedy(inst)
        assert routed == ((1,), ())
        outcome = simulate_combined(inst, thresholds=(0, 0))
        assert outcome.per_item_status[0] == "unroutable"
        assert outcome.assignment[0] is None

    def test_routing_ignores_fill_state(self):
        # both items prefer knapsack 0 even though the first fills it
        inst = MultiInstance((1, 1), ((1.0, 0.1), (1.0, 0.9)))
        outcome = simulate_combined(inst, thresholds=(0, 0))
        assert outcome.routed_sets == ((0, 1), ())
        assert outcome.per_item_status == ("accepted", "blocked")


class TestSimulateCombined:
    def test_single_knapsack_reduces_to_fixed_threshold(self, rng):
        from knapthresh.core import simulate_fixed_threshold

        for _ in range(50):
            n = int(rng.integers(1, 10))
            sizes = tuple(float(s) for s in 1.0 - rng.random(n))
            tau = float(rng.random())
            inst = MultiInstance((1.0,), tuple((s,) for s in sizes))
            multi = simulate_combined(inst, thresholds=(tau,))
            single = simulate_fixed_threshold(ItemSequence(sizes), tau)
            assert multi.per_knapsack_packed[0] == pytest.approx(
                float(single.packed_total)
            )
            assert multi.per_item_status == single.per_item_status

    def test_two_knapsack_hand_example(self):
        inst = MultiInstance((1, 1), ((0.6, 0.2), (0.7, 0.1)))
        outcome = simulate_combined(inst, thresholds=(0, 0))
        assert outcome.assignment == (0, None)
        assert sum(outcome.per_knapsack_packed) == pytest.approx(0.6)

    def test_admission_scales_with_capacity(self):
        inst = MultiInstance((2.0,), ((0.5,),))
        # threshold 0.3 of capacity 2.0 means the cutoff is 0.6
        outcome = simulate_combined(inst, thresholds=(0.3,))
        assert outcome.per_item_status == ("rejected",)

    def test_threshold_validation(self):
        inst = MultiInstance((1,), ((0.5,),))
        with pytest.raises(ValueError):
            simulate_combined(inst, thresholds=(0.5, 0.5))
        with pytest.raises(ValueError):
            simulate_combined(inst, thresholds=(1.5,))
        with pytest.raises(ValueError):
            simulate_combined(inst)

    def test_drawn_thresholds_are_reproducible(self):
        inst = MultiInstance((1, 1), ((0.6, 0.2), (0.7, 0.1)))
        a = simulate_combined(inst, cdf=cdf_f1(), rng=np.random.default_rng(9))
        b = simulate_combined(inst, cdf=cdf_f1(), rng=np.random.default_rng(9))
        assert a == b

    def test_reproduces_canonical_phase2_rule(self):
        # eps items accepted in knapsacks 0..e-1 via thresholds, then the
        # permuted wave; the lowest-empty tie rule must match the
        # permutation enumeration exactly.
        eps = Fraction(1e-3)
        n = 4
        for e in range(n + 1):
            taus = tuple(Fraction(0) if j < e else Fraction(1, 2) for j in range(n))
            for pi in permutations(range(n)):
                phase1 = [
                    tuple(eps if j == t else Fraction(0) for j in range(n))
                    for t in range(n)
                ]
                phase2 = []
                for t in range(1, n + 1):
                    closed = set(pi[: t - 1])
                    phase2.append(
                        tuple(Fraction(0) if j in closed else Fraction(1) for j in range(n))
                    )
                inst = MultiInstance((1,) * n, tuple(phase1 + phase2))
                outcome = simulate_combined(inst, thresholds=taus, tie_break="lowest_empty")
                ones_placed = sum(
                    1
                    for t, j in enumerate(outcome.assignment)
                    if t >= n and j is not None
                )
                assert ones_placed == canonical_phase2_accepts(pi, frozenset(range(e)))


class TestExpectedCombined:
    def test_separable_expectation_matches_manual_sum(self, rng):
        f1 = cdf_f1()
        for _ in range(30):
            inst = random_instance(rng)
            expectation = expected_combined(inst, f1)
            routed = route_greedy(inst)
            manual = 0.0
            for j, idxs in enumerate(routed):
                if not idxs:
                    continue
                seq = ItemSequence(tuple(inst.items[t][j] for t in idxs))
                manual += expected_packed_exact(
                    seq, f1, capacity=inst.capacities[j]
                ).expected_packed
            assert expectation.expected_total == pytest.approx(manual, abs=1e-12)

    def test_per_knapsack_three_sevenths(self, rng):
        f1 = cdf_f1()
        for _ in range(100):
            inst = random_instance(rng)
            expectation = expected_combined(inst, f1)
            for value, plus in zip(
                expectation.per_knapsack, per_knapsack_opt_plus(inst)
            ):
                assert value >= (3 / 7) * float(plus) - 1e-9


class TestGuarantee:
    def test_single_item_ratio_at_least_four_sevenths(self):
        inst = MultiInstance((1, 1), ((0.4, 0.9),))
        report = guarantee_check(inst, cdf_f1())
        assert report.opt == pytest.approx(0.9)
        assert report.ratio >= 4 / 7 - 1e-9

    def test_random_instances_meet_three_fourteenths(self, rng):
        f1 = cdf_f1()
        for _ in range(200):
            inst = random_instance(rng)
            report = guarantee_check(inst, f1)
            assert report.ratio >= 3 / 14 - 1e-9

    def test_wasteful_shared_argmax_instance(self):
        # every item prefers knapsack 0; the second knapsack is wasted
        inst = MultiInstance(
            (1.0, 1.0),
            ((0.9, 0.8), (0.9, 0.8), (0.9, 0.8)),
        )
        report = guarantee_check(inst, cdf_f1())
        assert report.opt == pytest.approx(1.8)
        assert report.ratio >= 3 / 14 - 1e-9

    def test_routed_mass_bounds_opt(self, rng):
        # sum_j min(routed mass, B_j) is at least half the true optimum
        for _ in range(100):
            inst = random_instance(rng)
            total_plus = sum(float(v) for v in per_knapsack_opt_plus(inst))
            opt = float(opt_multi(inst).value)
            assert total_plus >= 0.5 * opt - 1e-9


class TestInstanceValidation:
    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            MultiInstance((1,), ((1.5,),))
        with pytest.raises(ValueError):
            MultiInstance((1,), ((-0.1,),))
        with pytest.raises(ValueError):
            MultiInstance((0,), ((0.5,),))
        with pytest.raises(ValueError):
            MultiInstance((1, 1), ((0.5,),))
