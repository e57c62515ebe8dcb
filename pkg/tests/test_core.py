import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import entropy

from leakage_put import (
    Distribution,
    LeakageBudget,
    Mechanism,
    Method,
    PutSolution,
    TradeoffCurve,
    is_feasible,
    kl_divergence,
    permute_columns,
    pushforward,
    utility,
)
from leakage_put.errors import (
    BudgetOutOfRange,
    ConsistencyError,
    DimensionMismatch,
    InvalidDistribution,
    InvalidMechanism,
    InvalidPermutation,
    NonPositiveSupport,
)
from leakage_put.leakage import maximal_leakage

from .conftest import instances, random_mechanism, random_pair

W1 = [[1, 0, 0, 0], [0, .3, .3, .4], [0, .3, .3, .4], [0, .3, .3, .4]]


class TestTypes:
    def test_distribution_rejects_bad_sum(self):
        with pytest.raises(InvalidDistribution):
            Distribution([0.5, 0.6])

    def test_distribution_rejects_negative_and_short(self):
        with pytest.raises(InvalidDistribution):
            Distribution([1.5, -0.5])
        with pytest.raises(InvalidDistribution):
            Distribution([1.0])

    def test_distribution_is_immutable(self):
        d = Distribution([0.25, 0.75])
        with pytest.raises(ValueError):
            d.probs[0] = 0.5

    def test_mechanism_rejects_bad_row(self):
        with pytest.raises(InvalidMechanism, match="row 2 sums to 0.97"):
            Mechanism([[1, 0], [0.5, 0.47]])

    def test_mechanism_rejects_non_square(self):
        with pytest.raises(InvalidMechanism):
            Mechanism([[1, 0, 0], [0, 1, 0]])

    def test_budget_linear(self):
        assert LeakageBudget(0.5).linear == pytest.approx(math.sqrt(2), abs=1e-15)
        with pytest.raises(BudgetOutOfRange):
            LeakageBudget(-0.1)

    def test_budget_alphabet(self):
        assert LeakageBudget(1 + 1e-13).check_alphabet(2).bits == 1.0
        with pytest.raises(BudgetOutOfRange):
            LeakageBudget(1.1).check_alphabet(2)


class TestKl:
    def test_identity_case(self):
        assert kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0

    def test_hand_value(self):
        expected = 0.5 * math.log2(2) + 0.5 * math.log2(2 / 3)
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.2075, abs=1e-4)

    def test_deterministic_vs_uniform(self):
        assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(1.0, abs=1e-15)

    def test_errors(self):
        with pytest.raises(DimensionMismatch):
            kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])
        with pytest.raises(NonPositiveSupport):
            kl_divergence([0.5, 0.5], [1.0, 0.0])

    def test_matches_scipy(self, rng):
        for m in (2, 3, 5, 8):
            for _ in range(50):
                p, q = random_pair(rng, m)
                assert kl_divergence(p, q) == pytest.approx(entropy(p, q, base=2), abs=1e-13)

    def test_zero_iff_equal(self, rng):
        for _ in range(200):
            p, q = random_pair(rng, 4)
            assert kl_divergence(p, p) == 0.0
            assert kl_divergence(p, q) > 1e-9


class TestPushforwardAndUtility:
    def test_pushforward_examples(self):
        assert np.allclose(pushforward([0.3, 0.7], np.eye(2)).probs, [0.3, 0.7])
        assert np.allclose(pushforward([0.3, 0.7], [[.5, .5], [.5, .5]]).probs, [0.5, 0.5])
        assert np.allclose(pushforward([0.3, 0.7], [[0, 1], [1, 0]]).probs, [0.7, 0.3])

    def test_pushforward_allows_zero_output(self):
        out = pushforward([0.3, 0.7], [[1, 0], [1, 0]])
        assert out.probs.tolist() == [1.0, 0.0]

    def test_rank_one_and_identity(self, rng):
        for m in (2, 3, 6):
            p1, p2 = random_pair(rng, m)
            assert utility(p1, p2, Mechanism.rank_one(np.full(m, 1 / m))) == pytest.approx(0.0, abs=1e-15)
            assert utility(p1, p2, np.eye(m)) == pytest.approx(kl_divergence(p1, p2), abs=1e-15)

    def test_composed_example(self):
        u = utility([0.3, 0.7], [0.7, 0.3], [[1, 0], [0.5, 0.5]])
        by_hand = 0.65 * math.log2(0.65 / 0.85) + 0.35 * math.log2(0.35 / 0.15)
        assert u == pytest.approx(by_hand, abs=1e-14)

    def test_zero_output_column_contributes_nothing(self):
        w = [[1, 0, 0], [0, 1, 0], [0, 1, 0]]
        u = utility([0.2, 0.3, 0.5], [0.5, 0.3, 0.2], w)
        assert u == pytest.approx(entropy([0.2, 0.8], [0.5, 0.5], base=2), abs=1e-14)

    def test_rejects_non_positive_hypothesis(self):
        with pytest.raises(NonPositiveSupport):
            utility([1.0, 0.0], [0.5, 0.5], np.eye(2))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            utility([0.5, 0.5], [0.4, 0.6], np.eye(3))

    @settings(max_examples=200, deadline=None)
    @given(instances())
    def test_data_processing(self, inst):
        _, p1, p2, w = inst
        u = utility(p1, p2, w)
        assert 0.0 <= u <= kl_divergence(p1, p2) + 1e-12


class TestFeasibility:
    def test_identity_over_budget(self):
        assert not is_feasible(np.eye(4), 1.0)

    def test_two_level_matrix_at_one_bit(self):
        assert is_feasible(W1, 1.0)

    def test_rank_one_at_zero(self):
        assert is_feasible(Mechanism.rank_one([0.2, 0.3, 0.5]), 0.0)

    def test_raw_bad_rows_are_infeasible(self):
        assert not is_feasible([[1, 0], [0.5, 0.4]], 1.0)
        assert not is_feasible([[1.1, -0.1], [0.5, 0.5]], 1.0)

    def test_tolerance_parameter(self):
        w = [[0.5 + 1e-6, 0.5 - 1e-6], [0.5, 0.5]]
        assert not is_feasible(w, 0.0)
        assert is_feasible(w, 0.0, tol=1e-5)


class TestPermuteColumns:
    def test_identity_permutation(self):
        w = Mechanism([[0.7, 0.3], [0.2, 0.8]])
        assert np.array_equal(permute_columns(w, [0, 1]).rows, w.rows)

    def test_swap(self):
        out = permute_columns([[0.7, 0.3], [0.2, 0.8]], [1, 0])
        assert out.rows.tolist() == [[0.3, 0.7], [0.8, 0.2]]

    def test_invalid(self):
        with pytest.raises(InvalidPermutation):
            permute_columns(np.eye(3), [0, 0, 1])

    @settings(max_examples=200, deadline=None)
    @given(instances(), st.randoms(use_true_random=False))
    def test_invariance(self, inst, rnd):
        m, p1, p2, w = inst
        perm = list(range(m))
        rnd.shuffle(perm)
        wp = permute_columns(w, perm)
        assert utility(p1, p2, wp) == pytest.approx(utility(p1, p2, w), abs=1e-12)
        assert maximal_leakage(wp) == pytest.approx(maximal_leakage(w), abs=1e-12)


def test_zero_column_blending(rng):
    # with column j all zero, moving mass between j and k changes nothing
    for _ in range(200):
        m = int(rng.integers(3, 7))
        p1, p2 = random_pair(rng, m)
        w = random_mechanism(rng, m)
        j, k = rng.choice(m, size=2, replace=False)
        w[:, j] = 0.0
        w[:, k] += 1e-3
        w /= w.sum(axis=1, keepdims=True)
        swapped = w.copy()
        swapped[:, [j, k]] = w[:, [k, j]]
        base = utility(p1, p2, w)
        for lam in (0.0, 0.3, 0.5, 0.9, 1.0):
            assert utility(p1, p2, lam * w + (1 - lam) * swapped) == pytest.approx(base, abs=1e-12)


class TestSolutionAndCurve:
    def test_build_and_validate(self):
        sol = PutSolution.build([0.3, 0.7], [0.7, 0.3], np.eye(2), Method.LP_HIGH_UTILITY, 1.0)
        sol.validate()
        assert sol.objective == sol.utility_bits
        assert sol.leakage_bits == pytest.approx(1.0, abs=1e-15)

    def test_validate_catches_tampering(self):
        sol = PutSolution.build([0.3, 0.7], [0.7, 0.3], np.eye(2), Method.BINARY_EXACT, 1.0)
        bad = PutSolution(sol.mechanism, sol.utility_bits + 1e-6, sol.leakage_bits, sol.method,
                          sol.p1, sol.p2, sol.budget)
        with pytest.raises(ConsistencyError):
            bad.validate()

    def test_validate_catches_over_budget(self):
        sol = PutSolution.build([0.3, 0.7], [0.7, 0.3], np.eye(2), Method.BINARY_EXACT, 0.5)
        with pytest.raises(ConsistencyError):
            sol.validate()

    def _sol(self, u_row, l):
        w = [[1 - u_row, u_row], [0.0, 1.0]]
        return PutSolution.build([0.3, 0.7], [0.7, 0.3], w, Method.BINARY_EXACT, l)

    def test_curve_monotone(self):
        pts = [(0.2, self._sol(0.5, 0.2)), (0.5, self._sol(0.1, 0.5))]
        assert len(TradeoffCurve(pts)) == 2

    def test_curve_rejects_drop_and_unsorted(self):
        with pytest.raises(ConsistencyError):
            TradeoffCurve([(0.2, self._sol(0.1, 0.2)), (0.5, self._sol(0.5, 0.5))])
        with pytest.raises(ConsistencyError):
            TradeoffCurve([(0.5, self._sol(0.5, 0.5)), (0.5, self._sol(0.1, 0.5))])
