"""Exact privacy-utility tradeoff for binary sources.

A Bernoulli parameter ``p`` stands for the distribution vector ``(1 - p, p)``
over the letters ``{0, 1}``. With ``s = 2**l`` the leakage constraint on the
off-diagonal entries ``(rho1, rho2)`` of

    W = [[1 - rho1, rho1],
         [rho2,     1 - rho2]]

reads ``2 - s <= rho1 + rho2 <= s``. The feasible set is a hexagon, and
since the utility is convex one of its six corners is optimal. Two corners
are rank one (zero utility); the rest form two column-permutation pairs
whose utilities are :func:`f1` and :func:`f2`.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .core import LeakageBudget, Mechanism, Method, PutSolution
from .errors import BudgetOutOfRange, DegenerateHypotheses, DomainError

L_CLAMP = 1e-12
TIE_TOL = 1e-12  # f1 and f2 closer than this count as a tie


@dataclasses.dataclass(frozen=True)
class BinaryParams:
    p1: float
    p2: float
    l: float

    def __post_init__(self):
        for name in ("p1", "p2"):
            v = float(getattr(self, name))
            if not 0.0 < v < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {v}")
            object.__setattr__(self, name, v)
        if self.p1 == self.p2:
            raise DegenerateHypotheses(f"p1 == p2 == {self.p1}: the hypotheses coincide")
        object.__setattr__(self, "l", _checked_budget(self.l))

    @property
    def distributions(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([1 - self.p1, self.p1]), np.array([1 - self.p2, self.p2])


def _checked_budget(l: float) -> float:
    l = float(l)
    if not math.isfinite(l) or l < 0:
        raise BudgetOutOfRange(f"l must lie in [0, 1], got {l}")
    if l > 1:
        if l - 1 > L_CLAMP:
            raise BudgetOutOfRange(f"l must lie in [0, 1] for a binary source, got {l}")
        l = 1.0
    return l


def _params(p1, p2=None, l=None) -> BinaryParams:
    if isinstance(p1, BinaryParams):
        return p1
    return BinaryParams(p1, p2, l)


def f1(p1, p2=None, l=None) -> float:
    """Utility at the corner ``[[2 - 2**l, 2**l - 1], [1, 0]]``.

    Accepts either ``(p1, p2, l)`` or a :class:`BinaryParams`.
    """
    prm = _params(p1, p2, l)
    p1, p2 = prm.p1, prm.p2
    gain = 2.0 ** prm.l - 1.0
    a1 = (1.0 - gain) + p1 * gain
    a2 = (1.0 - gain) + p2 * gain
    value = ((p1 - 1.0) * gain * math.log2((1.0 - p2) * a1 / ((1.0 - p1) * a2))
             + math.log2(a1 / a2))
    return max(value, 0.0)


def f2(p1, p2=None, l=None) -> float:
    """Utility at the corner ``[[0, 1], [2**l - 1, 2 - 2**l]]``."""
    prm = _params(p1, p2, l)
    p1, p2 = prm.p1, prm.p2
    gain = 2.0 ** prm.l - 1.0
    b1 = 1.0 - p1 * gain
    b2 = 1.0 - p2 * gain
    value = p1 * gain * math.log2(p1 * b2 / (p2 * b1)) + math.log2(b1 / b2)
    return max(value, 0.0)


def _corner(rho1: float, rho2: float) -> Mechanism:
    return Mechanism([[1.0 - rho1, rho1], [rho2, 1.0 - rho2]])


def vertex_coordinates(l: float) -> list[tuple[float, float]]:
    """``(rho1, rho2)`` of the six hexagon corners, numbered 1 to 6.

    1 and 4 are column swaps of each other, as are 2 and 3; 5 and 6 are
    the rank-one corners ``(0, 1)`` and ``(1, 0)``.
    """
    s = 2.0 ** _checked_budget(l)
    return [
        (s - 1.0, 1.0),
        (1.0, s - 1.0),
        (0.0, 2.0 - s),
        (2.0 - s, 0.0),
        (0.0, 1.0),
        (1.0, 0.0),
    ]


def binary_vertices(l: float) -> list[Mechanism]:
    """The six corner mechanisms of the feasible hexagon for budget ``l``."""
    return [_corner(r1, r2) for r1, r2 in vertex_coordinates(l)]


def solve_binary(p1, p2=None, l=None) -> PutSolution:
    """Optimal binary mechanism for budget ``l``.

    Returns the corner attaining ``max(f1, f2)``, preferring the ``f1``
    corner on ties. The column-swapped twin of the returned mechanism is
    equally optimal and is kept in ``provenance["alternatives"]``.
    """
    prm = _params(p1, p2, l)
    v1, v2 = f1(prm), f2(prm)
    corners = binary_vertices(prm.l)
    tie = abs(v1 - v2) <= TIE_TOL
    if tie or v1 > v2:
        chosen, twin, branch = corners[0], corners[3], "f1"
    else:
        chosen, twin, branch = corners[1], corners[2], "f2"
    alternatives = [twin.rows.tolist()]
    if tie:
        other = corners[1] if branch == "f1" else corners[0]
        alternatives.append(other.rows.tolist())
    d1, d2 = prm.distributions
    return PutSolution.build(
        d1, d2, chosen, Method.BINARY_EXACT, LeakageBudget(prm.l),
        f1=v1, f2=v2, branch=branch, tie=tie, alternatives=alternatives,
        closed_form=max(v1, v2),
    )
