"""High-privacy regime (``l <= 1``) for alphabets of size three or more.

Near a rank-one mechanism with common row ``w0`` the utility is replaced by
its quadratic (Euclidean) approximation

    0.5 * sum_j ((p1 - p2) @ W[:, j])**2 / w0[j],

whose maximum under a leakage budget ``l`` is ``(2**l - 1) / 2 * ||p1 - p2||_1**2``.
It is attained by a mechanism with two informative columns. One is
supported on the letters more likely under ``p1``, the other on the rest.
Every remaining column is constant.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .core import (
    Distribution,
    LeakageBudget,
    Mechanism,
    Method,
    PutSolution,
    as_budget,
    as_mechanism,
    hypothesis_pair,
    utility,
)
from .errors import (
    AlphabetTooSmall,
    BudgetOutOfRange,
    DegenerateHypotheses,
    DimensionMismatch,
    DivisionByZeroSupport,
)


@dataclasses.dataclass(frozen=True)
class SignPartition:
    """Indices (0-based) where ``p1 - p2`` is positive, and the rest."""

    i_plus: tuple[int, ...]
    i_minus: tuple[int, ...]


@dataclasses.dataclass(frozen=True, eq=False)
class ReferenceRow:
    """Row ``w0`` of the rank-one anchor and the radius ``delta`` around it.

    ``delta`` is the largest entrywise distance from ``w0`` to a row of the
    mechanism the anchor was taken from, which bounds ``|(pW)_j - w0_j|``
    for every source ``p``.
    """

    w0: Distribution
    delta: float = 0.0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")

    @property
    def in_high_privacy_ball(self) -> bool:
        """Whether ``delta <= 1/M``, the neighbourhood the approximation assumes."""
        return self.delta <= 1.0 / self.w0.size

    @classmethod
    def from_mechanism(cls, w) -> ReferenceRow:
        """Anchor at the average of the distinct rows of ``w``."""
        rows = as_mechanism(w).rows
        distinct = np.unique(rows, axis=0)
        w0 = distinct.mean(axis=0)
        delta = float(np.max(np.abs(rows - w0)))
        return cls(Distribution.normalized(w0), delta)


def sign_partition(p1, p2) -> SignPartition:
    """Split the letters by the sign of ``p1 - p2``; zero differences go to ``i_minus``."""
    p1, p2 = hypothesis_pair(p1, p2)
    diff = p1.probs - p2.probs
    if np.all(diff == 0):
        raise DegenerateHypotheses("p1 == p2: the hypotheses coincide")
    plus = tuple(int(i) for i in np.flatnonzero(diff > 0))
    minus = tuple(int(i) for i in np.flatnonzero(diff <= 0))
    return SignPartition(plus, minus)


def eit_objective(p1, p2, w, anchor: ReferenceRow) -> float:
    """Quadratic approximation ``0.5 * ||(p1 - p2) W diag(w0)**-0.5||**2``.

    Columns where ``(p1 - p2) W`` vanishes contribute zero whatever ``w0`` is.
    """
    p1, p2 = hypothesis_pair(p1, p2)
    w = as_mechanism(w)
    w0 = anchor.w0.probs
    if not (p1.size == w.size == w0.size):
        raise DimensionMismatch("p1, p2, w and w0 must share the alphabet size")
    proj = (p1.probs - p2.probs) @ w.rows
    live = proj != 0
    if np.any(w0[live] <= 0):
        j = int(np.flatnonzero(live & (w0 <= 0))[0])
        raise DivisionByZeroSupport(f"w0[{j + 1}] = 0 but (p1 - p2) W is nonzero there")
    return float(0.5 * np.sum(proj[live] ** 2 / w0[live]))


def _check_regime(p1, p2, budget) -> tuple[Distribution, Distribution, LeakageBudget]:
    p1, p2 = hypothesis_pair(p1, p2)
    if p1.size < 3:
        raise AlphabetTooSmall(f"needs M >= 3, got M = {p1.size}; use the binary solver")
    budget = as_budget(budget)
    if budget.bits > 1.0:
        if budget.bits - 1.0 > 1e-12:
            raise BudgetOutOfRange(f"high-privacy regime needs l <= 1, got {budget.bits}")
        budget = LeakageBudget(1.0)
    return p1, p2, budget


def eit_optimal_value(p1, p2, budget) -> float:
    """``(2**l - 1) / 2 * ||p1 - p2||_1**2``."""
    p1, p2, budget = _check_regime(p1, p2, budget)
    if np.all(p1.probs == p2.probs):
        raise DegenerateHypotheses("p1 == p2: the hypotheses coincide")
    l1 = float(np.sum(np.abs(p1.probs - p2.probs)))
    return (budget.linear - 1.0) / 2.0 * l1 ** 2


def eit_mechanism(p1, p2, budget) -> Mechanism:
    """The two-informative-column optimum of the quadratic approximation.

    Column 0 carries ``2**l - 1`` on ``i_plus``, column 1 carries it on
    ``i_minus``; the remaining ``2 - 2**l`` of every row is spread evenly
    over columns ``2 .. M-1``.
    """
    p1, p2, budget = _check_regime(p1, p2, budget)
    part = sign_partition(p1, p2)
    m = p1.size
    gain = budget.linear - 1.0
    rows = np.zeros((m, m))
    rows[list(part.i_plus), 0] = gain
    rows[list(part.i_minus), 1] = gain
    rows[:, 2:] = (2.0 - budget.linear) / (m - 2)
    return Mechanism(rows)


def solve_eit(p1, p2, budget) -> PutSolution:
    """Solve the high-privacy approximation.

    ``surrogate_value`` holds the approximate objective; ``utility_bits`` is
    the exact utility of the returned mechanism, which lower-bounds the
    true optimum since the mechanism is feasible.
    """
    p1, p2, budget = _check_regime(p1, p2, budget)
    w = eit_mechanism(p1, p2, budget)
    part = sign_partition(p1, p2)
    value = eit_optimal_value(p1, p2, budget)
    anchor = ReferenceRow.from_mechanism(w)
    return PutSolution.build(
        p1, p2, w, Method.EIT_HIGH_PRIVACY, budget,
        surrogate_value=value,
        i_plus=list(part.i_plus),
        i_minus=list(part.i_minus),
        anchor=anchor.w0.probs.tolist(),
        anchor_radius=anchor.delta,
        exact_utility_bits=utility(p1, p2, w),
    )
