"""Brute-force checks that do not share code paths with the solvers.

* :func:`grid_oracle_binary` scans the ``(rho1, rho2)`` square for ``M = 2``.
* :func:`vertex_sample_oracle` maximises random linear objectives over the
  leakage polytope with HiGHS, then climbs from each vertex by repeated
  linearisation. Every value it reports is the exact utility of a
  feasible mechanism, so the result is a certified lower bound.
* :func:`simulate_test` runs the likelihood-ratio test on sampled data and
  measures the type-II error exponent.

Randomness always comes from numpy's PCG64 seeded through ``SeedSequence``,
with one independent stream per sample index. Serial and parallel runs
therefore produce the same report.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import enum
import math
import os

import numba
import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from .core import (
    FEASIBILITY_TOL,
    LeakageBudget,
    Mechanism,
    Method,
    PutSolution,
    as_budget,
    as_mechanism,
    hypothesis_pair,
    is_feasible,
    utility,
)
from .errors import DomainError, SolverError

RNG_NAME = "numpy PCG64 via SeedSequence"
LN2 = math.log(2.0)


class OracleMethod(str, enum.Enum):
    GRID = "Grid"
    VERTEX_SAMPLE = "VertexSample"


@dataclasses.dataclass(frozen=True, eq=False)
class OracleReport:
    best_mechanism: Mechanism
    best_utility: float
    evaluations: int
    method: OracleMethod
    is_lower_bound: bool
    budget: LeakageBudget
    details: dict = dataclasses.field(default_factory=dict)

    def to_solution(self, p1, p2) -> PutSolution:
        method = Method.ORACLE_GRID if self.method is OracleMethod.GRID else Method.ORACLE_VERTEX_SAMPLE
        return PutSolution.build(p1, p2, self.best_mechanism, method, self.budget,
                                 evaluations=self.evaluations,
                                 is_lower_bound=self.is_lower_bound, **self.details)


def _workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("LEAKAGE_PUT_THREADS", "0") or 0)
    return workers if workers > 0 else (os.cpu_count() or 1)


# ---------------------------------------------------------------- grid (M = 2)

@numba.njit(cache=True, nogil=True)
def _binary_kl_bits(q1: float, q2: float, r1: float, r2: float) -> float:
    # Bernoulli q is the vector (1-q, q); a = Pr(output letter 0)
    a1 = (1.0 - q1) * (1.0 - r1) + q1 * r2
    a2 = (1.0 - q2) * (1.0 - r1) + q2 * r2
    d = 0.0
    if a1 > 0.0:
        d += a1 * math.log(a1 / a2)
    b1 = 1.0 - a1
    if b1 > 0.0:
        d += b1 * math.log(b1 / (1.0 - a2))
    return d / math.log(2.0)


@numba.njit(cache=True, nogil=True)
def _scan_rows(grid, start, stop, q1, q2, lo, hi):
    """Best feasible grid point with ``rho2 = grid[start:stop]``; first index wins ties."""
    n = grid.size
    best, best_k, count = -1.0, -1, 0
    for i in range(start, stop):
        r2 = grid[i]
        for j in range(n):
            r1 = grid[j]
            t = r1 + r2
            if t < lo - 1e-12 or t > hi + 1e-12:
                continue
            count += 1
            d = _binary_kl_bits(q1, q2, r1, r2)
            if d > best:
                best, best_k = d, i * n + j
    return best, best_k, count


@numba.njit(cache=True, nogil=True)
def _scan_lines(grid, q1, q2, lo, hi):
    """Best point on the two boundary lines, one per grid abscissa and ordinate."""
    best, b1, b2, count = -1.0, 0.0, 0.0, 0
    for c in (lo, hi):
        for k in range(grid.size):
            g = grid[k]
            other = c - g
            if other < 0.0 or other > 1.0:
                continue
            for r1, r2 in ((other, g), (g, other)):
                count += 1
                d = _binary_kl_bits(q1, q2, r1, r2)
                if d > best:
                    best, b1, b2 = d, r1, r2
    return best, b1, b2, count


def grid_oracle_binary(p1: float, p2: float, l: float, resolution: int = 2001,
                       workers: int | None = 1, chunk_rows: int = 256) -> OracleReport:
    """Exhaustive search over ``resolution x resolution`` off-diagonal pairs.

    ``p1`` and ``p2`` are Bernoulli parameters. Besides the feasible grid
    points, the search visits the points of the boundary lines
    ``rho1 + rho2 = 2 - 2**l`` and ``2**l`` at every grid abscissa and
    ordinate. Those are the grid points within half a cell of the lines,
    snapped onto them, so corners lying on the lines are hit exactly.
    """
    if resolution < 100:
        raise DomainError(f"resolution must be >= 100, got {resolution}")
    for name, v in (("p1", p1), ("p2", p2)):
        if not 0.0 < v < 1.0:
            raise DomainError(f"{name} must lie in (0, 1), got {v}")
    q1, q2 = float(p1), float(p2)
    budget = as_budget(l).check_alphabet(2)
    lo, hi = 2.0 - budget.linear, budget.linear
    grid = np.linspace(0.0, 1.0, resolution)
    starts = range(0, resolution, chunk_rows)

    def run(start):
        return _scan_rows(grid, start, min(start + chunk_rows, resolution), q1, q2, lo, hi)

    n_workers = _workers(workers)
    if n_workers == 1:
        chunks = [run(s) for s in starts]
    else:
        with concurrent.futures.ThreadPoolExecutor(n_workers) as pool:
            chunks = list(pool.map(run, starts))
    value, k, _ = max(chunks, key=lambda r: (r[0], -r[1]))
    r1, r2 = grid[k % resolution], grid[k // resolution]
    line_value, l1, l2, line_count = _scan_lines(grid, q1, q2, lo, hi)
    if line_value > value:
        value, r1, r2 = line_value, l1, l2
    evaluations = sum(c[2] for c in chunks) + line_count
    w = Mechanism([[1.0 - r1, r1], [r2, 1.0 - r2]])
    return OracleReport(best_mechanism=w, best_utility=max(value, 0.0), evaluations=evaluations,
                        method=OracleMethod.GRID, is_lower_bound=True, budget=budget,
                        details=dict(resolution=resolution, rho=[float(r1), float(r2)]))


# ------------------------------------------------------- vertex sampling (any M)

def _polytope(m: int, linear_budget: float):
    """Lifted leakage polytope over ``(vec W, eps)`` for HiGHS."""
    eye = np.eye(m)
    caps = np.hstack([np.eye(m * m), -np.kron(np.ones((m, 1)), eye)])
    budget_row = np.concatenate([np.zeros(m * m), np.ones(m)])[None, :]
    A_ub = np.vstack([caps, budget_row])
    b_ub = np.concatenate([np.zeros(m * m), [linear_budget]])
    A_eq = np.hstack([np.kron(eye, np.ones((1, m))), np.zeros((m, m))])
    return A_ub, b_ub, A_eq, np.ones(m)


def _gradient(p1: np.ndarray, p2: np.ndarray, w: np.ndarray) -> np.ndarray:
    """A (sub)gradient of ``D(p1 W || p2 W)`` in ``W``, in bits.

    Output letters with zero mass use likelihood ratio 1; by homogeneity
    any positive ratio gives a valid subgradient there.
    """
    a, b = p1 @ w, p2 @ w
    # common full support: a_j == 0 exactly when b_j == 0
    live = (a > 0) & (b > 0)
    ratio = np.ones_like(a)
    ratio[live] = a[live] / b[live]
    log2e = 1.0 / LN2
    return np.outer(p1, np.log2(ratio) + log2e) - np.outer(p2, ratio * log2e)


class _VertexSearch:
    def __init__(self, p1, p2, budget: LeakageBudget):
        self.p1, self.p2 = p1, p2
        self.m = p1.size
        self.budget = budget
        self.A_ub, self.b_ub, self.A_eq, self.b_eq = _polytope(self.m, budget.linear)

    def vertex(self, weights: np.ndarray) -> np.ndarray:
        m = self.m
        c = np.concatenate([-weights.ravel(), np.zeros(m)])
        res = linprog(c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
                      bounds=(0, None), method="highs-ds")
        if res.status != 0:
            raise SolverError(f"HiGHS failed on a vertex query: {res.message}")
        w = np.clip(res.x[:m * m].reshape(m, m), 0.0, None)
        return w / w.sum(axis=1, keepdims=True)

    def utility(self, w: np.ndarray) -> float:
        a, b = self.p1 @ w, self.p2 @ w
        mask = a > 0
        return max(float(np.sum(a[mask] * np.log2(a[mask] / b[mask]))), 0.0)

    def climb(self, w: np.ndarray, steps: int) -> tuple[np.ndarray, float, int]:
        """Linearise and re-solve until the utility stops improving.

        Convexity makes every accepted step non-decreasing in exact utility.
        """
        value = self.utility(w)
        used = 0
        for _ in range(steps):
            nxt = self.vertex(_gradient(self.p1, self.p2, w))
            used += 1
            v = self.utility(nxt)
            if v <= value + 1e-12:
                break
            w, value = nxt, v
        return w, value, used

    def sample(self, seed: int, index: int, ascent_steps: int) -> tuple[float, int, np.ndarray, int]:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))
        w = self.vertex(rng.standard_normal((self.m, self.m)))
        used = 1
        if ascent_steps:
            w, value, extra = self.climb(w, ascent_steps)
            used += extra
        else:
            value = self.utility(w)
        return value, index, w, used


def vertex_sample_oracle(p1, p2, budget, samples: int = 1000, seed: int = 0,
                         ascent_steps: int = 25, workers: int | None = 1) -> OracleReport:
    """Best exact utility over vertices reached from random linear objectives.

    Each sample draws a standard-normal weight on every ``W[i, j]``, takes
    the maximising vertex of the leakage polytope, then (unless
    ``ascent_steps == 0``) repeatedly moves to the vertex maximising the
    utility's linearisation at the current point. The result is a lower
    bound on the optimum.
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    p1, p2 = hypothesis_pair(p1, p2)
    budget = as_budget(budget).check_alphabet(p1.size)
    search = _VertexSearch(p1.probs, p2.probs, budget)

    def run(i):
        return search.sample(seed, i, ascent_steps)

    n_workers = _workers(workers)
    if n_workers == 1:
        results = [run(i) for i in range(samples)]
    else:
        with concurrent.futures.ThreadPoolExecutor(n_workers) as pool:
            results = list(pool.map(run, range(samples)))
    value, index, w, _ = max(results, key=lambda r: (r[0], -r[1]))
    mech = Mechanism.normalized(w)
    if not is_feasible(mech, budget, FEASIBILITY_TOL):
        raise SolverError("vertex oracle produced an infeasible mechanism")
    return OracleReport(best_mechanism=mech, best_utility=utility(p1, p2, mech),
                        evaluations=sum(r[3] for r in results),
                        method=OracleMethod.VERTEX_SAMPLE, is_lower_bound=True, budget=budget,
                        details=dict(samples=samples, seed=seed, best_sample=index,
                                     ascent_steps=ascent_steps, rng=RNG_NAME))


# ------------------------------------------------------ Chernoff-Stein simulation

@dataclasses.dataclass(frozen=True)
class SimulationReport:
    n: int
    trials: int
    alpha: float
    type1_rate: float
    type2_rate: float
    log2_type2_rate: float
    empirical_exponent: float
    theoretical_exponent: float
    type2_rate_direct: float
    threshold: float
    tie_reject_prob: float
    degenerate: bool
    seed: int
    rng: str = RNG_NAME
    estimator: str = "importance sampling from H1 with weights 2**-LLR"

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def simulate_test(p1, p2, w, n: int, trials: int, alpha: float = 0.1, seed: int = 0) -> SimulationReport:
    """Neyman-Pearson test on ``n`` released symbols, repeated ``trials`` times.

    The statistic is ``LLR = sum_k log2(q1(x_k) / q2(x_k))`` with
    ``q = p W``; the test decides for ``H2`` when ``LLR`` falls below a
    threshold. The threshold and a tie-breaking probability are calibrated
    on one batch of ``H1`` samples so that the type-I rate is ``alpha``.
    They are then evaluated on a fresh ``H1`` batch.

    Type-II rates at useful ``n`` are far below ``1 / trials``, so
    ``type2_rate`` is estimated by importance sampling:
    ``Pr_2(accept H1) = E_1[2**-LLR ; accept H1]``. A plain count on ``H2``
    samples is reported as ``type2_rate_direct``.
    """
    if n < 1 or trials < 1:
        raise DomainError("n and trials must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    p1, p2 = hypothesis_pair(p1, p2)
    w = as_mechanism(w)
    q1 = np.clip(p1.probs @ w.rows, 0.0, None)
    q2 = np.clip(p2.probs @ w.rows, 0.0, None)
    q1, q2 = q1 / q1.sum(), q2 / q2.sum()
    live = q1 > 0
    llr = np.zeros_like(q1)
    llr[live] = np.log2(q1[live] / q2[live])

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    calib = rng.multinomial(n, q1, size=trials) @ llr
    held = rng.multinomial(n, q1, size=trials) @ llr
    under_h2 = rng.multinomial(n, q2, size=trials) @ llr

    k = min(int(math.floor(alpha * trials)), trials - 1)
    tau = float(np.sort(calib)[k])
    eps = 1e-9 * max(1.0, abs(tau))

    def split(x):
        return x < tau - eps, np.abs(x - tau) <= eps

    below, tie = split(calib)
    f_tie = tie.mean()
    gamma = float(np.clip((alpha - below.mean()) / f_tie, 0.0, 1.0)) if f_tie > 0 else 0.0

    below, tie = split(held)
    type1 = float(np.mean(below + gamma * tie))
    accept = np.where(below, 0.0, np.where(tie, 1.0 - gamma, 1.0))
    keep = accept > 0
    if keep.any():
        log2_type2 = float(logsumexp(-held[keep] * LN2, b=accept[keep]) / LN2 - math.log2(trials))
    else:
        log2_type2 = -math.inf
    log2_type2 = min(log2_type2, 0.0)
    below2, tie2 = split(under_h2)
    direct = float(np.mean(np.where(below2, 0.0, np.where(tie2, 1.0 - gamma, 1.0))))

    return SimulationReport(
        n=n, trials=trials, alpha=alpha,
        type1_rate=type1,
        type2_rate=float(2.0 ** log2_type2),
        log2_type2_rate=log2_type2,
        empirical_exponent=max(-log2_type2 / n, 0.0),
        theoretical_exponent=utility(p1, p2, w),
        type2_rate_direct=direct,
        threshold=tau,
        tie_reject_prob=gamma,
        degenerate=bool(np.allclose(q1, q2, rtol=0, atol=1e-15)),
        seed=seed,
    )
