"""Command-line front end.

Subcommands: ``leakage``, ``solve``, ``sweep``, ``simulate``, ``oracle``.
Distributions are JSON arrays given inline or as ``@path``. A bare number
``p`` is read as the binary distribution ``(1 - p, p)``. Mechanisms are
``{"rows": [[...], ...]}`` or a bare array of rows.

Exit codes: 0 success, 2 bad input or domain error, 3 solver limit,
4 internal consistency failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import binary, eit, lp, oracle
from .core import (
    FEASIBILITY_TOL,
    Distribution,
    LeakageBudget,
    Mechanism,
    Method,
    PutSolution,
    TradeoffCurve,
    hypothesis_pair,
)
from .errors import ConsistencyError, InputError, PutError, SolverError
from .leakage import is_permutation_matrix, is_rank_one, maximal_leakage

DIGITS = 12
EXIT_INPUT, EXIT_SOLVER, EXIT_CONSISTENCY = 2, 3, 4


def fmt(x):
    """Round floats (recursively) to 12 significant digits for output."""
    if isinstance(x, dict):
        return {k: fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [fmt(v) for v in x]
    if isinstance(x, np.ndarray):
        return fmt(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not math.isfinite(x) else float(f"{x:.{DIGITS}g}")
    return x


def _load_json(text: str):
    if text.startswith("@"):
        path = Path(text[1:])
        try:
            text = path.read_text()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"not valid JSON: {exc}") from None


def parse_distribution(text: str, tol: float) -> Distribution:
    value = _load_json(text)
    if isinstance(value, dict):
        value = value.get("probs", value)
    if isinstance(value, (int, float)):
        value = [1.0 - value, value]
    return Distribution.normalized(value, tol=tol)


def parse_mechanism(text: str, tol: float) -> Mechanism:
    if not text.startswith("@") and not text.lstrip().startswith(("[", "{")):
        text = "@" + text
    value = _load_json(text)
    if isinstance(value, dict):
        if "rows" not in value:
            raise InputError('mechanism JSON object needs a "rows" key')
        value = value["rows"]
    return Mechanism.normalized(value, tol=tol)


def mechanism_json(w: Mechanism) -> dict:
    return {"rows": fmt(w.rows)}


def solution_json(sol: PutSolution) -> dict:
    out = {
        "mechanism": mechanism_json(sol.mechanism),
        "utility_bits": sol.utility_bits,
        "leakage_bits": sol.leakage_bits,
        "budget_bits": sol.budget.bits,
        "method": sol.method.value,
        "p1": sol.p1.probs,
        "p2": sol.p2.probs,
    }
    if sol.surrogate_value is not None:
        out["surrogate_value"] = sol.surrogate_value
    if sol.provenance:
        out["provenance"] = sol.provenance
    return fmt(out)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _threads() -> int:
    n = int(os.environ.get("LEAKAGE_PUT_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


# ------------------------------------------------------------------ dispatch

def resolve_method(method: str, m: int, l: float) -> str:
    if method != "auto":
        return method
    if m == 2:
        return "binary"
    if l <= 1.0:
        return "eit"
    if l >= lp.regime_floor(m):
        return "lp"
    return "oracle"


def solve(p1: Distribution, p2: Distribution, l: float, method: str = "auto", *,
          force_regime: bool = False, samples: int = 1000, seed: int = 0,
          resolution: int = 2001, notices=None) -> PutSolution:
    p1, p2 = hypothesis_pair(p1, p2)
    m = p1.size
    budget = LeakageBudget(l).check_alphabet(m)
    chosen = resolve_method(method, m, budget.bits)
    if method == "auto" and chosen == "oracle" and notices is not None:
        notices.append(f"no closed form for M={m} at l={budget.bits:g}; "
                       "reporting the vertex-sampling lower bound")
    if chosen == "binary":
        if m != 2:
            raise InputError(f"binary method needs M = 2, got M = {m}")
        return binary.solve_binary(p1.probs[1], p2.probs[1], budget.bits)
    if chosen == "eit":
        return eit.solve_eit(p1, p2, budget)
    if chosen == "lp":
        return lp.solve_high_utility(p1, p2, budget, force_regime=force_regime)
    if chosen == "oracle":
        if m == 2:
            report = oracle.grid_oracle_binary(p1.probs[1], p2.probs[1], budget.bits, resolution)
        else:
            report = oracle.vertex_sample_oracle(p1, p2, budget, samples=samples, seed=seed)
        return report.to_solution(p1, p2)
    raise InputError(f"unknown method {method!r}")


def _checked(sol: PutSolution, tol: float) -> PutSolution:
    sol.validate(feasibility_tol=tol)
    return sol


# ------------------------------------------------------------------ commands

def cmd_leakage(args) -> int:
    w = parse_mechanism(args.mechanism, args.tol)
    out = fmt({
        "leakage_bits": maximal_leakage(w),
        "is_rank_one": is_rank_one(w),
        "is_permutation": is_permutation_matrix(w),
    })
    _emit(json.dumps(out) + "\n", args.out)
    return 0


def cmd_solve(args) -> int:
    p1, p2 = parse_distribution(args.p1, args.tol), parse_distribution(args.p2, args.tol)
    notices: list[str] = []
    sol = solve(p1, p2, args.l, args.method, force_regime=args.force_regime,
                samples=args.samples, seed=args.seed, resolution=args.resolution,
                notices=notices)
    for note in notices:
        print(f"notice: {note}", file=sys.stderr)
    _checked(sol, args.tol)
    _emit(json.dumps(solution_json(sol), indent=2) + "\n", args.out)
    return 0


def _carry_forward(prev: PutSolution | None, sol: PutSolution) -> PutSolution:
    """For lower-bound oracles, a mechanism found at a smaller budget stays feasible."""
    if prev is None or sol.utility_bits >= prev.utility_bits:
        return sol
    return PutSolution.build(sol.p1, sol.p2, prev.mechanism, sol.method, sol.budget,
                             carried_from_bits=prev.budget.bits, **{
                                 k: v for k, v in prev.provenance.items() if k != "carried_from_bits"})


def cmd_sweep(args) -> int:
    p1, p2 = parse_distribution(args.p1, args.tol), parse_distribution(args.p2, args.tol)
    if args.steps < 1:
        raise InputError("--steps must be >= 1")
    if args.l_min > args.l_max:
        raise InputError("--l-min must not exceed --l-max")
    levels = [args.l_min] if args.steps == 1 else np.linspace(args.l_min, args.l_max, args.steps).tolist()

    def point(l):
        return solve(p1, p2, l, args.method, force_regime=args.force_regime,
                     samples=args.samples, seed=args.seed, resolution=args.resolution)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["l_bits", "utility_bits", "surrogate_value", "mechanism_id"])
    sidecar = []
    points = []
    failure = None
    with concurrent.futures.ThreadPoolExecutor(_threads()) as pool:
        futures = [pool.submit(point, l) for l in levels]
        prev = None
        for i, (l, fut) in enumerate(zip(levels, futures)):
            try:
                sol = fut.result()
                if sol.method in (Method.ORACLE_GRID, Method.ORACLE_VERTEX_SAMPLE):
                    sol = _carry_forward(prev, sol)
                _checked(sol, args.tol)
            except PutError as exc:
                failure = exc
                for f in futures[i + 1:]:
                    f.cancel()
                break
            prev = sol
            mid = f"m{i:04d}"
            writer.writerow(fmt([l, sol.utility_bits,
                                 "" if sol.surrogate_value is None else sol.surrogate_value]) + [mid])
            sidecar.append({"mechanism_id": mid, "l_bits": fmt(l), **solution_json(sol)})
            points.append((sol.budget, sol))

    if failure is None:
        try:
            TradeoffCurve(tuple(points))
        except ConsistencyError as exc:
            failure = exc
    _emit(buf.getvalue(), args.out)
    sidecar_path = args.sidecar or (f"{Path(args.out).with_suffix('')}.mechanisms.json" if args.out else None)
    if sidecar_path:
        Path(sidecar_path).write_text(json.dumps(sidecar, indent=2) + "\n")
    if failure is not None:
        raise failure
    return 0


def cmd_simulate(args) -> int:
    p1, p2 = parse_distribution(args.p1, args.tol), parse_distribution(args.p2, args.tol)
    if args.mechanism:
        w = parse_mechanism(args.mechanism, args.tol)
    else:
        if args.l is None:
            raise InputError("give either --mechanism or --l (with --method)")
        w = _checked(solve(p1, p2, args.l, args.method, force_regime=args.force_regime,
                           samples=args.samples, seed=args.seed), args.tol).mechanism
    report = oracle.simulate_test(p1, p2, w, n=args.n, trials=args.trials,
                                  alpha=args.alpha, seed=args.seed)
    out = report.as_dict()
    out["mechanism"] = mechanism_json(w)
    _emit(json.dumps(fmt(out), indent=2) + "\n", args.out)
    return 0


def cmd_oracle(args) -> int:
    p1, p2 = parse_distribution(args.p1, args.tol), parse_distribution(args.p2, args.tol)
    p1, p2 = hypothesis_pair(p1, p2)
    kind = args.kind
    if kind == "auto":
        kind = "grid" if p1.size == 2 else "vertex"
    if kind == "grid":
        if p1.size != 2:
            raise InputError("the grid oracle needs M = 2")
        report = oracle.grid_oracle_binary(p1.probs[1], p2.probs[1], args.l, args.resolution)
    else:
        report = oracle.vertex_sample_oracle(p1, p2, args.l, samples=args.samples, seed=args.seed)
    sol = _checked(report.to_solution(p1, p2), args.tol)
    out = solution_json(sol)
    out.update(fmt({"best_utility": report.best_utility, "evaluations": report.evaluations,
                    "is_lower_bound": report.is_lower_bound, "oracle": report.method.value}))
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leakage-put",
        description="Privacy mechanisms maximising the type-II error exponent under a maximal-leakage budget.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=FEASIBILITY_TOL,
                        help="parse and feasibility tolerance (default 1e-9)")
    common.add_argument("--out", help="write output here instead of stdout")

    hyp = argparse.ArgumentParser(add_help=False)
    hyp.add_argument("--p1", required=True, help="JSON array, @path, or Bernoulli parameter")
    hyp.add_argument("--p2", required=True, help="JSON array, @path, or Bernoulli parameter")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--method", default="auto", choices=["auto", "binary", "eit", "lp", "oracle"])
    solver.add_argument("--force-regime", action="store_true",
                        help="allow the lp method below log2(M-1)")
    solver.add_argument("--samples", type=int, default=1000, help="vertex-oracle samples")
    solver.add_argument("--seed", type=int, default=0)
    solver.add_argument("--resolution", type=int, default=2001, help="grid-oracle resolution")

    p = sub.add_parser("leakage", parents=[common], help="maximal leakage of a mechanism")
    p.add_argument("--mechanism", required=True, help="@path or inline JSON")
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("solve", parents=[common, hyp, solver], help="solve for one budget")
    p.add_argument("--l", type=float, required=True, help="leakage budget in bits")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common, hyp, solver], help="tradeoff curve as CSV")
    p.add_argument("--l-min", type=float, required=True)
    p.add_argument("--l-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--sidecar", help="JSON file for the mechanisms (default: next to --out)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[common, hyp, solver], help="Monte Carlo hypothesis test")
    p.add_argument("--mechanism", help="@path or inline JSON; otherwise solve with --method/--l")
    p.add_argument("--l", type=float)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--alpha", type=float, default=0.1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", parents=[common, hyp], help="brute-force reference value")
    p.add_argument("--l", type=float, required=True)
    p.add_argument("--kind", default="auto", choices=["auto", "grid", "vertex"])
    p.add_argument("--resolution", type=int, default=2001)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConsistencyError as exc:
        print(f"error: internal consistency check failed: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except SolverError as exc:
        print(f"error: solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
