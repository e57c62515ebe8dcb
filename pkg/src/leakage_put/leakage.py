"""Maximal leakage of a mechanism and its two extremal cases.

Maximal leakage from ``X`` to ``X_hat`` is ``log2 sum_j max_i W[i, j]``.
It reads only the mechanism, never the source distribution, and it lies
in ``[0, log2 M]``:

* it is 0 exactly when every row of ``W`` is the same (rank one);
* it is ``log2 M`` exactly when ``W`` is a permutation matrix.
"""

from __future__ import annotations

import math

import numpy as np

from .core import as_mechanism

EQUIVALENCE_TOL = 1e-9


def maximal_leakage(w) -> float:
    """Maximal leakage of ``w`` in bits, clipped into ``[0, log2 M]``."""
    w = as_mechanism(w)
    total = float(np.sum(np.max(w.rows, axis=0)))
    return min(max(math.log2(total), 0.0), math.log2(w.size))


def is_rank_one(w, tol: float = EQUIVALENCE_TOL) -> bool:
    """True when all rows agree with the first to within ``tol``."""
    rows = as_mechanism(w).rows
    return bool(np.all(np.abs(rows - rows[0]) <= tol))


def is_permutation_matrix(w, tol: float = EQUIVALENCE_TOL) -> bool:
    """True when every column maximum is 1 to within ``tol``.

    Row-stochasticity is already guaranteed by :class:`Mechanism`; with it,
    unit column maxima force exactly one 1 per row and per column.
    """
    rows = as_mechanism(w).rows
    return bool(np.all(np.abs(rows.max(axis=0) - 1.0) <= tol))
