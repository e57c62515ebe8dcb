"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Solves

    maximize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x >= 0

and always returns a basic feasible solution (a vertex), which is what the
sparsity checks in :mod:`leakage_put.lp` rely on. Intended for problems
with at most a few thousand columns; everything is held in one dense
tableau.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import Infeasible, IterationLimitExceeded, Unbounded

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    objective: float
    basis: tuple[int, ...]
    iterations: int


class DenseSimplex:
    """One solve's worth of mutable tableau state. Not shared across threads."""

    def __init__(self, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
                 pivot_tol: float = PIVOT_TOL, max_iter: int | None = None):
        c = np.asarray(c, dtype=float)
        n = c.size
        A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
        b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
        A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
        b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
        if A_ub.shape[0] != b_ub.size or A_eq.shape[0] != b_eq.size:
            raise ValueError("constraint matrix and bound vector sizes differ")

        self.n = n
        self.c = c
        self.tol = pivot_tol
        n_ub, n_eq = A_ub.shape[0], A_eq.shape[0]
        m = n_ub + n_eq
        self.max_iter = max_iter if max_iter is not None else 50 * (n + m)

        # columns: original | slacks | artificials | rhs
        flip_ub = b_ub < 0
        flip_eq = b_eq < 0
        n_art = int(flip_ub.sum()) + n_eq
        width = n + n_ub + n_art + 1
        T = np.zeros((m, width))
        T[:n_ub, :n] = A_ub
        T[:n_ub, n:n + n_ub] = np.eye(n_ub)
        T[:n_ub, -1] = b_ub
        T[n_ub:, :n] = A_eq
        T[n_ub:, -1] = b_eq
        T[np.flatnonzero(flip_ub)] *= -1
        T[n_ub + np.flatnonzero(flip_eq)] *= -1

        basis = []
        art = n + n_ub
        for i in range(m):
            if i < n_ub and not flip_ub[i]:
                basis.append(n + i)
            else:
                T[i, art] = 1.0
                basis.append(art)
                art += 1
        self.T = T
        self.basis = basis
        self.first_artificial = n + n_ub
        self.iterations = 0

    def _pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        others = T[:, col].copy()
        others[row] = 0.0
        T -= np.outer(others, T[row])
        self.basis[row] = col

    def _reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        cb = cost[self.basis]
        return cost - cb @ self.T[:, :-1]

    def _run(self, cost: np.ndarray, allowed: int) -> None:
        """Maximise ``cost`` over columns ``< allowed`` from the current basis."""
        T = self.T
        while True:
            rc = self._reduced_costs(cost)[:allowed]
            entering = np.flatnonzero(rc > self.tol)
            if entering.size == 0:
                return
            col = int(entering[0])  # Bland: lowest index
            column = T[:, col]
            rows = np.flatnonzero(column > self.tol)
            if rows.size == 0:
                raise Unbounded(f"column {col} can grow without bound")
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + self.tol * max(1.0, abs(best))]
            row = int(min(ties, key=lambda r: self.basis[r]))  # Bland: lowest basic index
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise IterationLimitExceeded(f"no optimum after {self.max_iter} pivots")
            self._pivot(row, col)

    def _drop_artificials(self) -> None:
        first = self.first_artificial
        keep = []
        for i, b in enumerate(list(self.basis)):
            if b < first:
                keep.append(i)
                continue
            candidates = np.flatnonzero(np.abs(self.T[i, :first]) > self.tol)
            if candidates.size:
                self._pivot(i, int(candidates[0]))
                keep.append(i)
            # otherwise the row is redundant and is dropped
        self.T = np.hstack([self.T[keep, :first], self.T[keep, -1:]])
        self.basis = [self.basis[i] for i in keep]

    def solve(self) -> SimplexResult:
        width = self.T.shape[1] - 1
        first = self.first_artificial
        if width > first:
            phase1 = np.zeros(width)
            phase1[first:] = -1.0
            self._run(phase1, width)
            infeas = float(np.sum(self.T[[i for i, b in enumerate(self.basis) if b >= first], -1]))
            if infeas > FEAS_TOL:
                raise Infeasible(f"phase I ended with artificial mass {infeas:.3g}")
            self._drop_artificials()
        cost = np.zeros(self.T.shape[1] - 1)
        cost[:self.n] = self.c
        self._run(cost, self.T.shape[1] - 1)

        full = np.zeros(self.T.shape[1] - 1)
        full[self.basis] = self.T[:, -1]
        full[np.abs(full) < 1e-12] = 0.0
        x = full[:self.n]
        return SimplexResult(x=x, objective=float(self.c @ x),
                             basis=tuple(self.basis), iterations=self.iterations)


def linprog_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, **kwargs) -> SimplexResult:
    """Convenience wrapper: build a :class:`DenseSimplex` and solve it."""
    return DenseSimplex(c, A_ub, b_ub, A_eq, b_eq, **kwargs).solve()
