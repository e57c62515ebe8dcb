"""Optimal maximal-leakage privacy mechanisms for binary hypothesis testing."""

from .binary import BinaryParams, binary_vertices, f1, f2, solve_binary
from .core import (
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
from .eit import eit_objective, eit_optimal_value, sign_partition, solve_eit
from .leakage import is_permutation_matrix, is_rank_one, maximal_leakage
from .lp import build_lp, check_sparsity_structure, psi_matrix, solve_lp, trace_objective
from .oracle import grid_oracle_binary, simulate_test, vertex_sample_oracle

__version__ = "0.1.0"
