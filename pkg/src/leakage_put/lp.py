"""High-utility regime (``l >= log2(M - 1)``): linearise around the identity.

To first order around ``W = I`` the utility is ``Tr(Psi W^T)``, with

    Psi[i, j] = p1[i] * (log2(p1[j] / p2[j]) + log2(e)) - p2[i] * (p1[j] / p2[j]) * log2(e).

Every row of ``Psi`` peaks on its diagonal. Maximising this linear
objective over the leakage polytope is an LP in the ``M**2`` entries of
``W`` and ``M`` slack variables ``eps_j``:

    W[i, j] <= eps_j,   sum_j eps_j <= 2**l,   sum_j W[i, j] = 1,   W >= 0.

The LP is solved with :class:`leakage_put.simplex.DenseSimplex` so the
answer is always a vertex.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from .core import (
    FEASIBILITY_TOL,
    LeakageBudget,
    Mechanism,
    Method,
    PutSolution,
    as_budget,
    as_mechanism,
    hypothesis_pair,
)
from .errors import BudgetOutOfRange, DimensionMismatch, RegimeWarning
from .simplex import DenseSimplex

LOG2_E = math.log2(math.e)


@dataclasses.dataclass(frozen=True, eq=False)
class PsiMatrix:
    """Gradient of ``D(p1 W || p2 W)`` with respect to ``W`` at ``W = I``, in bits."""

    entries: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def second_best_columns(self) -> np.ndarray:
        """Per row, the off-diagonal column with the largest entry (lowest index on ties)."""
        masked = self.entries.copy()
        np.fill_diagonal(masked, -np.inf)
        return np.argmax(masked, axis=1)

    def diagonal_gaps(self) -> np.ndarray:
        """``Psi[i, i] - max_{j != i} Psi[i, j]`` per row; non-negative."""
        cols = self.second_best_columns()
        idx = np.arange(self.size)
        return self.entries[idx, idx] - self.entries[idx, cols]


def psi_matrix(p1, p2) -> PsiMatrix:
    p1, p2 = hypothesis_pair(p1, p2)
    a, b = p1.probs, p2.probs
    ratio = a / b
    entries = np.outer(a, np.log2(ratio) + LOG2_E) - np.outer(b, ratio * LOG2_E)
    # the diagonal simplifies exactly; use the closed form to avoid cancellation
    np.fill_diagonal(entries, a * np.log2(ratio))
    entries.flags.writeable = False
    return PsiMatrix(entries)


def trace_objective(psi: PsiMatrix, w) -> float:
    """``Tr(Psi W^T) = sum_ij Psi[i, j] W[i, j]``."""
    w = as_mechanism(w)
    if psi.size != w.size:
        raise DimensionMismatch(f"Psi is {psi.size}x{psi.size} but W is {w.size}x{w.size}")
    return float(np.sum(psi.entries * w.rows))


@dataclasses.dataclass(frozen=True, eq=False)
class LpProblem:
    """Standard-form LP over ``x = (vec(W) row-major, eps)``.

    Nonnegativity of ``eps`` is implied by ``0 <= W[i, j] <= eps_j``, so the
    polytope is cut out by ``2 M^2 + M + 1`` constraints: the ``M^2`` caps,
    the budget row, the ``M`` row sums and ``W >= 0``.
    """

    m: int
    budget: LeakageBudget
    psi: PsiMatrix
    p1: np.ndarray
    p2: np.ndarray
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    forced: bool = False

    @property
    def n_variables(self) -> int:
        return self.c.size

    @property
    def n_constraints(self) -> int:
        return self.A_ub.shape[0] + self.A_eq.shape[0] + self.m * self.m


def leakage_polytope(m: int, budget) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``(A_ub, b_ub, A_eq, b_eq)`` of the lifted leakage polytope in ``(vec W, eps)``."""
    budget = as_budget(budget)
    n = m * m + m
    A_ub = np.zeros((m * m + 1, n))
    for i in range(m):
        for j in range(m):
            A_ub[i * m + j, i * m + j] = 1.0
            A_ub[i * m + j, m * m + j] = -1.0
    A_ub[-1, m * m:] = 1.0
    b_ub = np.zeros(m * m + 1)
    b_ub[-1] = budget.linear
    A_eq = np.zeros((m, n))
    for i in range(m):
        A_eq[i, i * m:(i + 1) * m] = 1.0
    return A_ub, b_ub, A_eq, np.ones(m)


def regime_floor(m: int) -> float:
    """Smallest budget, ``log2(M - 1)``, for which the linearisation is intended."""
    return math.log2(m - 1)


def build_lp(p1, p2, budget, force_regime: bool = False) -> LpProblem:
    """Encode ``max Tr(Psi W^T)`` over the leakage polytope.

    Budgets below ``log2(M - 1)`` are refused unless ``force_regime`` is
    set, in which case a :class:`RegimeWarning` is issued instead.
    """
    p1, p2 = hypothesis_pair(p1, p2)
    m = p1.size
    budget = as_budget(budget).check_alphabet(m)
    floor = regime_floor(m)
    if budget.bits < floor - 1e-12:
        msg = (f"l = {budget.bits:.6g} is below log2(M-1) = {floor:.6g}; "
               "the linear approximation targets the high-utility regime")
        if not force_regime:
            raise BudgetOutOfRange(msg + " (pass force_regime=True to override)")
        warnings.warn(msg, RegimeWarning, stacklevel=2)
    psi = psi_matrix(p1, p2)
    c = np.concatenate([psi.entries.ravel(), np.zeros(m)])
    A_ub, b_ub, A_eq, b_eq = leakage_polytope(m, budget)
    return LpProblem(m=m, budget=budget, psi=psi, p1=p1.probs, p2=p2.probs, c=c,
                     A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, forced=force_regime)


def witness_mechanism(psi: PsiMatrix, budget) -> Mechanism:
    """Feasible two-nonzeros-per-row mechanism for ``2**l >= M / 2``.

    Diagonal ``2**l / M``; the remaining ``(M - 2**l) / M`` of each row sits
    on that row's best off-diagonal ``Psi`` column.
    """
    budget = as_budget(budget)
    m = psi.size
    if budget.linear < m / 2:
        raise BudgetOutOfRange(f"witness needs 2**l >= M/2, got 2**l = {budget.linear:.6g}")
    rows = np.zeros((m, m))
    idx = np.arange(m)
    rows[idx, psi.second_best_columns()] = (m - budget.linear) / m
    rows[idx, idx] = budget.linear / m
    return Mechanism(rows)


def solve_lp(problem: LpProblem, max_iter: int | None = None) -> PutSolution:
    """Solve the LP; ``utility_bits`` is the exact utility at the returned vertex."""
    m = problem.m
    result = DenseSimplex(problem.c, problem.A_ub, problem.b_ub,
                          problem.A_eq, problem.b_eq, max_iter=max_iter).solve()
    w = Mechanism.normalized(result.x[:m * m].reshape(m, m), tol=FEASIBILITY_TOL)
    linear_value = trace_objective(problem.psi, w)
    provenance = dict(
        linear_value=linear_value,
        slack_eps=result.x[m * m:].tolist(),
        iterations=result.iterations,
        solver="dense two-phase simplex, Bland's rule",
        forced_regime=problem.forced,
    )
    if problem.budget.linear >= m / 2:
        witness = witness_mechanism(problem.psi, problem.budget)
        provenance["witness_linear_value"] = trace_objective(problem.psi, witness)
    return PutSolution.build(problem.p1, problem.p2, w, Method.LP_HIGH_UTILITY,
                             problem.budget, surrogate_value=linear_value, **provenance)


def solve_high_utility(p1, p2, budget, force_regime: bool = False) -> PutSolution:
    return solve_lp(build_lp(p1, p2, budget, force_regime=force_regime))


@dataclasses.dataclass(frozen=True)
class StructureReport:
    zero_count: int
    required_zeros: int
    diagonal_positive: bool
    max_nonzeros_per_row: int

    @property
    def enough_zeros(self) -> bool:
        return self.zero_count >= self.required_zeros

    @property
    def at_most_two_per_row(self) -> bool:
        return self.max_nonzeros_per_row <= 2

    @property
    def passed(self) -> bool:
        return self.enough_zeros and self.diagonal_positive and self.at_most_two_per_row


def check_sparsity_structure(w, tol: float = 1e-9) -> StructureReport:
    """Sparsity pattern expected of high-utility LP vertices.

    Entries at or below ``tol`` count as zero. The pattern asks for at
    least ``M (M - 2)`` zeros, a strictly positive diagonal and at most two
    nonzeros in every row.
    """
    rows = as_mechanism(w).rows
    m = rows.shape[0]
    nonzero = rows > tol
    return StructureReport(
        zero_count=int(np.sum(~nonzero)),
        required_zeros=m * (m - 2),
        diagonal_positive=bool(np.all(np.diag(nonzero))),
        max_nonzeros_per_row=int(nonzero.sum(axis=1).max()),
    )
