"""Command-line surface: problem file I/O, solving, generation, benchmarks.

Subcommands
-----------
solve   run a solver on a problem file, print the solution as JSON
gen     write a random problem file for a generator spec
bench   sweep (size, seed, solver) combinations into a benchmark CSV
oracle  print the brute-force reference solution of a small problem file

Problem files are JSON documents with integer fields ``n`` and ``m`` and
nested arrays ``H`` (n x n), ``f`` (n), ``A`` (m x n), ``b`` (m), plus an
optional ``metadata`` object.  Floats are serialized by Python's shortest
round-trip repr, so write -> read reproduces values bit for bit.

Exit codes: 0 success, 2 parse/format error, 4 iteration cap reached,
3 assumption violation, 5 oracle size limit, 1 other solver errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .avi import (
    STATUS_EXACT,
    STATUS_TOLERANCE,
    AviProblem,
    SolverSettings,
    solve_dr,
    solve_dr_daqp,
    solve_projected_gradient,
)
from .errors import (
    AviSolveError,
    DimensionMismatch,
    NotPositiveDefinite,
    ParseError,
    TooLarge,
)
from .gen import GENERATOR_VERSION, GenSpec, random_avi
from .oracle import brute_force_solve

__all__ = [
    "EXIT_OK",
    "EXIT_PARSE",
    "EXIT_ASSUMPTION",
    "EXIT_MAXITER",
    "EXIT_TOO_LARGE",
    "TRACE_COLUMNS",
    "BENCH_COLUMNS",
    "read_problem",
    "write_problem",
    "read_reference",
    "write_trace",
    "build_parser",
    "main",
    "entry_point",
]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_ASSUMPTION = 3
EXIT_MAXITER = 4
EXIT_TOO_LARGE = 5

TRACE_COLUMNS = [
    "k",
    "merit",
    "active_set_size",
    "newton_attempted",
    "newton_accepted",
    "inner_qp_iters",
    "dist_to_ref",
]

BENCH_COLUMNS = [
    "n",
    "m",
    "gamma",
    "seed",
    "solver",
    "status",
    "iterations",
    "inner_qp_iters",
    "newton_attempts",
    "newton_acceptances",
    "wall_time_s",
]

_SOLVERS = {
    "dr-daqp": solve_dr_daqp,
    "dr": solve_dr,
    "pg": solve_projected_gradient,
}


# ---------------------------------------------------------------------------
# file I/O


def read_problem(path) -> tuple[AviProblem, dict]:
    """Parse a problem file; returns (problem, metadata dict)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read problem file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"problem file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"problem file {path} must hold a JSON object")
    for key in ("n", "m", "H", "f", "A", "b"):
        if key not in doc:
            raise ParseError(f"problem file {path} is missing field '{key}'")
    try:
        n = int(doc["n"])
        m = int(doc["m"])
        H = np.asarray(doc["H"], dtype=float)
        f = np.asarray(doc["f"], dtype=float)
        A = np.asarray(doc["A"], dtype=float)
        b = np.asarray(doc["b"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"problem file {path} has malformed arrays: {exc}") from exc
    if m == 0:
        A = A.reshape(0, n)
        b = b.reshape(0)
    if H.shape != (n, n) or f.shape != (n,) or A.shape != (m, n) or b.shape != (m,):
        raise ParseError(
            f"problem file {path} has inconsistent dimensions for n={n}, m={m}"
        )
    try:
        problem = AviProblem(H=H, f=f, A=A, b=b)
    except (DimensionMismatch, ValueError) as exc:
        raise ParseError(f"problem file {path} rejected: {exc}") from exc
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise ParseError(f"problem file {path} has a non-object metadata field")
    return problem, metadata


def write_problem(path, problem: AviProblem, metadata: dict | None = None) -> None:
    doc = {
        "n": problem.n,
        "m": problem.m,
        "H": problem.H.tolist(),
        "f": problem.f.tolist(),
        "A": problem.A.tolist(),
        "b": problem.b.tolist(),
        "metadata": metadata or {},
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_reference(path) -> np.ndarray:
    """Load a reference solution: a JSON object with an ``x`` array.

    The JSON printed by ``avi-solve solve`` qualifies, so a converged run's
    output can be redirected to a file and reused as the reference.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read reference file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "x" not in doc:
        raise ParseError(f"reference file {path} must be a JSON object with an 'x' array")
    try:
        return np.asarray(doc["x"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"reference file {path} has a malformed 'x' array: {exc}") from exc


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRACE_COLUMNS)
        for r in trace:
            writer.writerow(
                [
                    r.k,
                    r.merit,
                    r.active_set_size,
                    int(r.newton_attempted),
                    int(r.newton_accepted),
                    r.inner_qp_iters,
                    "" if r.dist_to_ref is None else r.dist_to_ref,
                ]
            )


# ---------------------------------------------------------------------------
# subcommands


def _settings_from_args(args) -> SolverSettings:
    overrides = {}
    if args.rho is not None:
        overrides["rho"] = args.rho
    if args.eta is not None:
        overrides["eta"] = args.eta
    if args.max_iter is not None:
        overrides["max_iter"] = args.max_iter
    if args.stab_count is not None:
        overrides["stab_count"] = args.stab_count
    try:
        return SolverSettings(**overrides)
    except ValueError as exc:
        raise ParseError(f"invalid solver settings: {exc}") from exc


def cmd_solve(args) -> int:
    problem, _ = read_problem(args.problem)
    reference = read_reference(args.reference) if args.reference else None
    settings = _settings_from_args(args)
    solver = _SOLVERS[args.solver]
    solution, trace = solver(problem, settings, reference=reference)
    print(
        json.dumps(
            {
                "x": solution.x.tolist(),
                "lambda": solution.multipliers.tolist(),
                "active_set": list(solution.active_set),
                "status": solution.status,
                "iterations": solution.iterations,
                "kkt_residual": solution.kkt_residual,
            },
            indent=1,
        )
    )
    if args.trace:
        write_trace(args.trace, trace)
    if solution.status in (STATUS_EXACT, STATUS_TOLERANCE):
        return EXIT_OK
    return EXIT_MAXITER


def cmd_gen(args) -> int:
    try:
        spec = GenSpec(
            n=args.n,
            m=args.m,
            gamma_asym=args.gamma,
            seed=args.seed,
            regularization=args.reg,
        )
    except ValueError as exc:
        raise ParseError(f"invalid generator spec: {exc}") from exc
    problem = random_avi(spec)
    metadata = {
        "seed": spec.seed,
        "gamma_asym": spec.gamma_asym,
        "regularization": spec.regularization,
        "generator_version": GENERATOR_VERSION,
    }
    write_problem(args.output, problem, metadata)
    print(f"wrote {args.output} (n={problem.n}, m={problem.m}, seed={spec.seed})")
    return EXIT_OK


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ParseError(f"invalid {what} list '{text}'") from exc
    if not values:
        raise ParseError(f"empty {what} list")
    return values


def cmd_bench(args) -> int:
    sizes = _parse_int_list(args.sizes, "size")
    if any(n < 1 for n in sizes):
        raise ParseError("sizes must be at least 1")
    if args.instances < 1:
        raise ParseError("instances must be at least 1")
    solver_names = [tok.strip() for tok in args.solvers.split(",") if tok.strip()]
    if not solver_names:
        raise ParseError("empty solver list")
    for name in solver_names:
        if name not in _SOLVERS:
            raise ParseError(f"unknown solver '{name}' (choose from {sorted(_SOLVERS)})")

    rows = []
    for n in sizes:
        m = 10 * n
        for seed in range(1, args.instances + 1):
            spec = GenSpec(n=n, m=m, gamma_asym=args.gamma, seed=seed)
            try:
                problem = random_avi(spec)
            except AviSolveError:
                for name in solver_names:
                    rows.append([n, m, args.gamma, seed, name, "Error", 0, 0, 0, 0, 0.0])
                continue
            for name in solver_names:
                start = time.perf_counter()
                try:
                    solution, trace = _SOLVERS[name](problem)
                    wall = time.perf_counter() - start
                    rows.append(
                        [
                            n,
                            m,
                            args.gamma,
                            seed,
                            name,
                            solution.status,
                            solution.iterations,
                            sum(r.inner_qp_iters for r in trace),
                            sum(1 for r in trace if r.newton_attempted),
                            sum(1 for r in trace if r.newton_accepted),
                            wall,
                        ]
                    )
                except AviSolveError:
                    wall = time.perf_counter() - start
                    rows.append([n, m, args.gamma, seed, name, "Error", 0, 0, 0, 0, wall])
    rows.sort(key=lambda row: (row[0], row[3], row[4]))
    with open(args.output, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(BENCH_COLUMNS)
        writer.writerows(rows)
    print(f"wrote {args.output} ({len(rows)} rows)")
    return EXIT_OK


def cmd_oracle(args) -> int:
    problem, _ = read_problem(args.problem)
    result = brute_force_solve(problem)
    print(
        json.dumps(
            {
                "x": result.x.tolist(),
                "lambda": result.multipliers.tolist(),
                "active_set": list(result.active_set),
                "strictly_complementary": result.strictly_complementary,
                "certified": result.certified,
            },
            indent=1,
        )
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avi-solve",
        description="Solve affine variational inequalities over polyhedra.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem file")
    p_solve.add_argument("problem", help="path to a problem file")
    p_solve.add_argument(
        "--solver", choices=sorted(_SOLVERS), default="dr-daqp", help="solver to run"
    )
    p_solve.add_argument("--rho", type=float, default=None, help="splitting parameter")
    p_solve.add_argument("--eta", type=float, default=None, help="stopping tolerance")
    p_solve.add_argument("--max-iter", type=int, default=None, help="iteration cap")
    p_solve.add_argument(
        "--stab-count", type=int, default=None, help="streak length before a KKT attempt"
    )
    p_solve.add_argument("--trace", default=None, help="write per-iteration CSV here")
    p_solve.add_argument(
        "--reference", default=None, help="JSON file with an 'x' array for distance traces"
    )
    p_solve.set_defaults(func=cmd_solve)

    p_gen = sub.add_parser("gen", help="generate a random problem file")
    p_gen.add_argument("--n", type=int, required=True, help="number of variables")
    p_gen.add_argument("--m", type=int, required=True, help="number of constraints")
    p_gen.add_argument("--gamma", type=float, required=True, help="asymmetry in [0, 1]")
    p_gen.add_argument("--seed", type=int, required=True, help="generator seed")
    p_gen.add_argument("--reg", type=float, default=0.0, help="identity shift added to H")
    p_gen.add_argument("-o", "--output", required=True, help="output problem file")
    p_gen.set_defaults(func=cmd_gen)

    p_bench = sub.add_parser("bench", help="benchmark sweep to CSV")
    p_bench.add_argument("--sizes", required=True, help="comma-separated n values")
    p_bench.add_argument("--instances", type=int, required=True, help="seeds per size")
    p_bench.add_argument("--gamma", type=float, default=0.5, help="asymmetry in [0, 1]")
    p_bench.add_argument(
        "--solvers", default="dr-daqp", help="comma-separated subset of dr-daqp,dr,pg"
    )
    p_bench.add_argument("-o", "--output", required=True, help="output CSV")
    p_bench.set_defaults(func=cmd_bench)

    p_oracle = sub.add_parser("oracle", help="brute-force reference solution")
    p_oracle.add_argument("problem", help="path to a problem file (m <= 16)")
    p_oracle.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except NotPositiveDefinite as exc:
        # covers assumption violations raised at problem construction too
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except AviSolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
