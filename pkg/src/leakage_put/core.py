"""Distributions, mechanisms and the hypothesis-testing utility.

A mechanism ``W`` is an ``M x M`` row-stochastic matrix with
``W[i, j] = Pr(output j | input i)``. Applying it to i.i.d. data drawn from
``p1`` or ``p2`` turns the hypothesis test into one between ``p1 @ W`` and
``p2 @ W``, whose best type-II error exponent is ``D(p1 W || p2 W)``.

All logarithms are base 2; every utility and leakage is in bits.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import (
    BudgetOutOfRange,
    ConsistencyError,
    DimensionMismatch,
    InvalidDistribution,
    InvalidMechanism,
    InvalidPermutation,
    NonPositiveSupport,
)

SUM_TOL = 1e-12
POSITIVITY_FLOOR = 1e-12
FEASIBILITY_TOL = 1e-9


def _frozen_array(values: Any, ndim: int, what: str) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise (InvalidDistribution if ndim == 1 else InvalidMechanism)(
            f"{what} is not numeric: {exc}") from None
    if arr.ndim != ndim:
        raise (InvalidDistribution if ndim == 1 else InvalidMechanism)(
            f"{what} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise (InvalidDistribution if ndim == 1 else InvalidMechanism)(
            f"{what} contains non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over an ``M``-letter alphabet, ``M >= 2``.

    Zero entries are allowed here (push-forwards through a mechanism may
    have them). Hypotheses fed to the solvers go through
    :func:`hypothesis_pair`, which enforces full and common support.
    """

    probs: np.ndarray

    def __init__(self, probs: Iterable[float], tol: float = SUM_TOL):
        arr = _frozen_array(probs, 1, "distribution")
        if arr.size < 2:
            raise InvalidDistribution(f"alphabet size must be >= 2, got {arr.size}")
        if np.any(arr < 0):
            raise InvalidDistribution(
                f"entry {int(np.argmin(arr)) + 1} is negative ({arr.min():.6g})")
        total = float(arr.sum())
        if abs(total - 1.0) > tol:
            raise InvalidDistribution(f"entries sum to {total:.12g}, not 1")
        object.__setattr__(self, "probs", arr)

    @classmethod
    def normalized(cls, probs: Iterable[float], tol: float = FEASIBILITY_TOL) -> Distribution:
        """Validate at ``tol`` and then rescale so the sum is 1 to machine precision."""
        arr = np.asarray(Distribution(probs, tol=tol).probs)
        return cls(arr / arr.sum())

    @property
    def size(self) -> int:
        return self.probs.size

    def is_strictly_positive(self, floor: float = POSITIVITY_FLOOR) -> bool:
        return bool(np.all(self.probs >= floor))

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"Distribution({self.probs.tolist()})"


@dataclasses.dataclass(frozen=True, eq=False)
class Mechanism:
    """Square row-stochastic matrix; ``rows[i, j] = Pr(out=j | in=i)``."""

    rows: np.ndarray

    def __init__(self, rows: Any, tol: float = SUM_TOL):
        arr = _frozen_array(rows, 2, "mechanism")
        m, n = arr.shape
        if m != n:
            raise InvalidMechanism(f"mechanism must be square, got {m}x{n}")
        if m < 2:
            raise InvalidMechanism("mechanism must be at least 2x2")
        lo, hi = arr.min(), arr.max()
        if lo < -tol or hi > 1 + tol:
            bad = np.argwhere((arr < -tol) | (arr > 1 + tol))[0]
            raise InvalidMechanism(
                f"entry ({bad[0] + 1}, {bad[1] + 1}) = {arr[tuple(bad)]:.12g} "
                "is outside [0, 1]")
        sums = arr.sum(axis=1)
        for i, s in enumerate(sums):
            if abs(s - 1.0) > tol:
                raise InvalidMechanism(f"row {i + 1} sums to {s:.12g}")
        if lo < 0 or hi > 1:
            arr = np.clip(arr, 0.0, 1.0)
            arr.flags.writeable = False
        object.__setattr__(self, "rows", arr)

    @classmethod
    def normalized(cls, rows: Any, tol: float = FEASIBILITY_TOL) -> Mechanism:
        """Validate at ``tol``, clip into ``[0, 1]`` and rescale every row to sum 1.

        Used for solver output and parsed files, which carry rounding noise
        above the strict construction tolerance.
        """
        arr = np.clip(np.array(Mechanism(rows, tol=tol).rows), 0.0, 1.0)
        return cls(arr / arr.sum(axis=1, keepdims=True))

    @classmethod
    def identity(cls, m: int) -> Mechanism:
        return cls(np.eye(m))

    @classmethod
    def rank_one(cls, row: Iterable[float]) -> Mechanism:
        row = Distribution(row).probs
        return cls(np.tile(row, (row.size, 1)))

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    def __repr__(self) -> str:
        return f"Mechanism({self.rows.tolist()})"


def as_distribution(p: Distribution | Sequence[float] | np.ndarray) -> Distribution:
    return p if isinstance(p, Distribution) else Distribution(p)


def as_mechanism(w: Mechanism | Any) -> Mechanism:
    return w if isinstance(w, Mechanism) else Mechanism(w)


def hypothesis_pair(p1, p2, floor: float = POSITIVITY_FLOOR) -> tuple[Distribution, Distribution]:
    """Coerce and check a pair of hypotheses: same length, both strictly positive.

    Entries below ``floor`` are rejected rather than clamped.
    """
    p1, p2 = as_distribution(p1), as_distribution(p2)
    if p1.size != p2.size:
        raise DimensionMismatch(f"p1 has {p1.size} letters but p2 has {p2.size}")
    for name, p in (("p1", p1), ("p2", p2)):
        if not p.is_strictly_positive(floor):
            i = int(np.argmin(p.probs))
            raise NonPositiveSupport(
                f"{name}[{i + 1}] = {p.probs[i]:.3g} is below the positivity floor {floor:g}")
    return p1, p2


def kl_divergence(p, q) -> float:
    """Relative entropy ``D(p || q)`` in bits, with ``0 log(0/q) = 0``.

    ``q`` must be strictly positive.
    """
    p, q = as_distribution(p), as_distribution(q)
    if p.size != q.size:
        raise DimensionMismatch(f"p has {p.size} letters but q has {q.size}")
    if np.any(q.probs <= 0):
        raise NonPositiveSupport("q must be strictly positive")
    return _kl_bits(p.probs, q.probs)


def _kl_bits(a: np.ndarray, b: np.ndarray) -> float:
    # letters with a == 0 contribute nothing; callers guarantee b > 0 where a > 0
    mask = a > 0
    d = float(np.sum(a[mask] * np.log2(a[mask] / b[mask])))
    return max(d, 0.0)


def pushforward(p, w) -> Distribution:
    """Output distribution ``p @ W`` of the released symbol."""
    p, w = as_distribution(p), as_mechanism(w)
    if p.size != w.size:
        raise DimensionMismatch(f"distribution has {p.size} letters, mechanism is {w.size}x{w.size}")
    out = p.probs @ w.rows
    return Distribution(np.clip(out, 0.0, None) / out.sum())


def utility(p1, p2, w) -> float:
    """Type-II error exponent ``D(p1 W || p2 W)`` in bits.

    Output letters that are impossible under ``p2 W`` are also impossible
    under ``p1 W`` (common full support) and contribute zero.
    """
    p1, p2 = hypothesis_pair(p1, p2)
    w = as_mechanism(w)
    if p1.size != w.size:
        raise DimensionMismatch(f"distributions have {p1.size} letters, mechanism is {w.size}x{w.size}")
    return _kl_bits(p1.probs @ w.rows, p2.probs @ w.rows)


def column_max_sum(w) -> float:
    """``sum_j max_i W[i, j]``; the linear-domain leakage ``2**l``."""
    return float(np.sum(np.max(np.asarray(as_mechanism(w).rows), axis=0)))


def is_feasible(w, budget, tol: float = FEASIBILITY_TOL) -> bool:
    """Whether ``w`` meets the leakage budget and is row-stochastic, all within ``tol``.

    ``w`` may be a raw array, so rows that do not sum to one are reported
    here as infeasible instead of raising.
    """
    arr = np.asarray(w.rows if isinstance(w, Mechanism) else w, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        return False
    budget = as_budget(budget)
    if np.any(arr < -tol):
        return False
    if np.any(np.abs(arr.sum(axis=1) - 1.0) > tol):
        return False
    return bool(np.sum(arr.max(axis=0)) <= budget.linear + tol)


def permute_columns(w, perm: Sequence[int]) -> Mechanism:
    """Column ``i`` of the result is column ``perm[i]`` of ``w`` (0-based)."""
    w = as_mechanism(w)
    perm = list(perm)
    if sorted(perm) != list(range(w.size)):
        raise InvalidPermutation(f"{perm} is not a permutation of 0..{w.size - 1}")
    return Mechanism(w.rows[:, perm])


@dataclasses.dataclass(frozen=True)
class LeakageBudget:
    """Maximal-leakage budget ``l`` in bits, with ``linear = 2**l``."""

    bits: float
    linear: float = dataclasses.field(init=False)

    def __post_init__(self):
        bits = float(self.bits)
        if not math.isfinite(bits) or bits < 0:
            raise BudgetOutOfRange(f"leakage budget must be a finite value >= 0, got {self.bits}")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "linear", 2.0 ** bits)

    def check_alphabet(self, m: int, slack: float = 1e-12) -> LeakageBudget:
        """Reject budgets above ``log2 m``; values within ``slack`` are clamped."""
        top = math.log2(m)
        if self.bits > top + slack:
            raise BudgetOutOfRange(f"budget {self.bits} bits exceeds log2({m}) = {top:.12g}")
        return LeakageBudget(min(self.bits, top))


def as_budget(budget: LeakageBudget | float) -> LeakageBudget:
    return budget if isinstance(budget, LeakageBudget) else LeakageBudget(budget)


class Method(str, enum.Enum):
    BINARY_EXACT = "BinaryExact"
    EIT_HIGH_PRIVACY = "EitHighPrivacy"
    LP_HIGH_UTILITY = "LpHighUtility"
    ORACLE_GRID = "OracleGrid"
    ORACLE_VERTEX_SAMPLE = "OracleVertexSample"


@dataclasses.dataclass(frozen=True, eq=False)
class PutSolution:
    """A mechanism together with its exact utility and leakage.

    ``utility_bits`` is always the exact ``D(p1 W || p2 W)``. Approximate
    solvers put the value of the objective they actually optimised in
    ``surrogate_value``; anything else worth keeping goes in ``provenance``.
    """

    mechanism: Mechanism
    utility_bits: float
    leakage_bits: float
    method: Method
    p1: Distribution
    p2: Distribution
    budget: LeakageBudget
    surrogate_value: float | None = None
    provenance: dict = dataclasses.field(default_factory=dict)

    @classmethod
    def build(cls, p1, p2, w, method: Method, budget, surrogate_value=None, **provenance) -> PutSolution:
        from .leakage import maximal_leakage

        p1, p2 = hypothesis_pair(p1, p2)
        w = as_mechanism(w)
        return cls(
            mechanism=w,
            utility_bits=utility(p1, p2, w),
            leakage_bits=maximal_leakage(w),
            method=Method(method),
            p1=p1,
            p2=p2,
            budget=as_budget(budget),
            surrogate_value=None if surrogate_value is None else float(surrogate_value),
            provenance=dict(provenance),
        )

    def validate(self, leakage_tol: float = 1e-9, utility_tol: float = 1e-12,
                 feasibility_tol: float = FEASIBILITY_TOL) -> None:
        """Recompute leakage and utility from the mechanism; raise on mismatch."""
        from .leakage import maximal_leakage

        lk = maximal_leakage(self.mechanism)
        if abs(lk - self.leakage_bits) > leakage_tol:
            raise ConsistencyError(f"stored leakage {self.leakage_bits} != recomputed {lk}")
        u = utility(self.p1, self.p2, self.mechanism)
        if abs(u - self.utility_bits) > utility_tol:
            raise ConsistencyError(f"stored utility {self.utility_bits} != recomputed {u}")
        if not is_feasible(self.mechanism, self.budget, feasibility_tol):
            raise ConsistencyError(
                f"mechanism leaks {lk} bits, over the {self.budget.bits} bit budget")

    @property
    def objective(self) -> float:
        """The value the producing method maximised (surrogate if any)."""
        return self.utility_bits if self.surrogate_value is None else self.surrogate_value


@dataclasses.dataclass(frozen=True)
class TradeoffCurve:
    """Solutions over strictly increasing budgets.

    The optimised objective must be non-decreasing along the curve, since a
    larger budget only enlarges the feasible set.
    """

    points: tuple[tuple[LeakageBudget, PutSolution], ...]
    tol: float = 1e-9

    def __post_init__(self):
        pts = tuple((as_budget(b), s) for b, s in self.points)
        object.__setattr__(self, "points", pts)
        for (b0, s0), (b1, s1) in zip(pts, pts[1:]):
            if not b1.bits > b0.bits:
                raise ConsistencyError(f"budgets not strictly increasing: {b0.bits} then {b1.bits}")
            if s1.objective < s0.objective - self.tol:
                raise ConsistencyError(
                    f"objective drops from {s0.objective} at l={b0.bits} "
                    f"to {s1.objective} at l={b1.bits}")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)
