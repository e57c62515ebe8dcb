import numpy as np
import pytest
from scipy.optimize import linprog

from leakage_put.errors import Infeasible, IterationLimitExceeded, Unbounded
from leakage_put.simplex import DenseSimplex, linprog_max


def test_textbook_problem():
    # max 3x + 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18
    res = linprog_max([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
    assert res.objective == pytest.approx(36.0, abs=1e-12)
    assert np.allclose(res.x, [2, 6], atol=1e-12)


def test_equality_and_negative_rhs():
    # max x + y  s.t.  x + y == 1, -x <= -0.25
    res = linprog_max([1, 2], [[-1, 0]], [-0.25], [[1, 1]], [1])
    assert res.objective == pytest.approx(1.75, abs=1e-12)
    assert np.allclose(res.x, [0.25, 0.75], atol=1e-12)


def test_redundant_equalities_are_dropped():
    res = linprog_max([1, 0], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
    assert res.objective == pytest.approx(1.0, abs=1e-12)


def test_infeasible():
    with pytest.raises(Infeasible):
        linprog_max([1, 1], [[1, 1]], [1], [[1, 1]], [2])


def test_unbounded():
    with pytest.raises(Unbounded):
        linprog_max([1, 0], [[0, 1]], [1])


def test_iteration_limit():
    with pytest.raises(IterationLimitExceeded):
        DenseSimplex([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], max_iter=1).solve()


def test_degenerate_cycling_example():
    # Beale's example cycles under the largest-coefficient rule; Bland's terminates
    c = [0.75, -150, 0.02, -6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    res = linprog_max(c, A, [0, 0, 1])
    assert res.objective == pytest.approx(0.05, abs=1e-12)


def test_matches_highs_on_random_problems(rng):
    for _ in range(100):
        n, m_ub, m_eq = rng.integers(2, 9), rng.integers(1, 8), rng.integers(0, 3)
        c = rng.standard_normal(n)
        A_ub = rng.uniform(0, 1, (m_ub, n))
        b_ub = rng.uniform(1, 2, m_ub)
        A_eq = rng.uniform(0, 1, (m_eq, n))
        x0 = rng.uniform(0, 0.1, n)
        b_eq = A_eq @ x0
        ref = linprog(-c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq if m_eq else None,
                      b_eq=b_eq if m_eq else None, method="highs")
        res = linprog_max(c, A_ub, b_ub, A_eq if m_eq else None, b_eq if m_eq else None)
        assert res.objective == pytest.approx(-ref.fun, abs=1e-8)
        assert np.all(A_ub @ res.x <= b_ub + 1e-9)
        assert np.all(res.x >= 0)


def test_returns_basic_solution(rng):
    for _ in range(30):
        n, m = 8, 4
        res = linprog_max(rng.standard_normal(n), rng.uniform(0, 1, (m, n)), np.ones(m))
        # a vertex has at most as many nonzeros as constraints
        assert np.count_nonzero(res.x) <= m
