"""Exact reference solver for small problems by active-set enumeration.

For every subset S of constraints with |S| <= n and linearly independent
rows, the KKT equality system

    [[H, A_S'], [A_S, 0]] [x; lam_S] = [-f; b_S]

has a unique solution (H + H' positive definite plus full row rank make the
saddle matrix nonsingular).  The unique solution of the variational
inequality is the candidate that is also primal feasible with nonnegative
multipliers.  This module enumerates all subsets, which is exponential in m
and therefore gated at m <= 16; it exists as ground truth for tests and for
the command-line ``oracle`` command, not as a production solver.

The enumeration is deliberately independent of the main solver's KKT path:
systems are assembled in batches per subset size and solved with numpy's
batched LU, so agreement between oracle and solver is a genuine double
check rather than the same code run twice.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .avi import AviProblem, check_solution, kkt_residual
from .errors import NoCertificate, TooLarge

__all__ = ["OracleResult", "brute_force_solve", "certified_candidates"]

_MAX_CONSTRAINTS = 16
# feasibility slack for accepting a candidate (tighter than solver defaults)
_FEAS_TOL = 1e-9
# margins defining strict complementarity
_STRICT_MARGIN = 1e-6
# rank filter: keep subsets whose rows have orthogonal residual above this
# fraction of the row norm
_RANK_REL = 1e-10


@dataclass
class OracleResult:
    """Enumeration outcome.

    ``certified`` records whether the winning candidate passes the full KKT
    check at (1e-9, 1e-9); ``strictly_complementary`` whether every active
    multiplier and every inactive slack clears a 1e-6 margin.
    """

    x: np.ndarray
    multipliers: np.ndarray
    active_set: tuple[int, ...]
    strictly_complementary: bool
    certified: bool


def _independent_subsets(A: np.ndarray, size: int, row_norms: np.ndarray):
    """All index subsets of the given size whose constraint rows are
    linearly independent, decided by a batched QR projection-residual test."""
    m = A.shape[0]
    subsets = list(combinations(range(m), size))
    if size == 0 or not subsets:
        return subsets
    idx = np.array(subsets)  # (num, size)
    stacked = A[idx]  # (num, size, n)
    # QR of the transposed row stacks: |R_jj| is the norm of row j's
    # component orthogonal to the span of the previous rows
    r = np.linalg.qr(stacked.transpose(0, 2, 1), mode="r")
    diag = np.abs(np.diagonal(r, axis1=1, axis2=2))  # (num, size)
    floor = _RANK_REL * np.maximum(row_norms[idx], 1e-300)
    keep = np.all(diag > floor, axis=1)
    return [subsets[i] for i in np.flatnonzero(keep)]


def _solve_batch(p: AviProblem, subsets: list) -> tuple[np.ndarray, np.ndarray]:
    """Solve the KKT equality system for every subset of one common size.

    Returns (x_batch, lam_batch) with shapes (num, n) and (num, size).
    Rows that fail to solve (singular despite the rank filter) come back as
    NaN and are discarded by the caller.
    """
    n = p.n
    size = len(subsets[0])
    num = len(subsets)
    K = np.zeros((num, n + size, n + size))
    K[:, :n, :n] = p.H
    rhs = np.zeros((num, n + size))
    rhs[:, :n] = -p.f
    if size:
        idx = np.array(subsets)
        rows = p.A[idx]  # (num, size, n)
        K[:, :n, n:] = rows.transpose(0, 2, 1)
        K[:, n:, :n] = rows
        rhs[:, n:] = p.b[idx]
    try:
        sol = np.linalg.solve(K, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        # isolate the bad subsets; solve the rest one by one
        sol = np.full((num, n + size), np.nan)
        for i in range(num):
            try:
                sol[i] = np.linalg.solve(K[i], rhs[i])
            except np.linalg.LinAlgError:
                pass
    return sol[:, :n], sol[:, n:]


def brute_force_solve(p: AviProblem) -> OracleResult:
    """Enumerate all candidate active sets and return the certified winner.

    Candidates must satisfy primal slacks >= -1e-9 and multipliers >= -1e-9;
    among passing candidates the one with the smallest scaled KKT residual
    wins (ties keep the earliest in size-then-lexicographic order).  Raises
    TooLarge for m > 16 and NoCertificate when nothing passes, which signals
    an assumption violation or a tolerance pathology.
    """
    if p.m > _MAX_CONSTRAINTS:
        raise TooLarge(f"oracle limited to m <= {_MAX_CONSTRAINTS}, got m = {p.m}")
    row_norms = np.linalg.norm(p.A, axis=1) if p.m else np.zeros(0)
    best = None  # (residual, x, lam_full, subset)
    for size in range(0, min(p.n, p.m) + 1):
        subsets = _independent_subsets(p.A, size, row_norms)
        if not subsets:
            continue
        xs, lams = _solve_batch(p, subsets)
        finite = np.all(np.isfinite(xs), axis=1)
        if size:
            finite &= np.all(np.isfinite(lams), axis=1)
        slack = p.b - xs @ p.A.T if p.m else np.zeros((len(subsets), 0))
        primal_ok = (
            np.min(slack, axis=1) >= -_FEAS_TOL if p.m else np.ones(len(subsets), bool)
        )
        dual_ok = (
            np.min(lams, axis=1) >= -_FEAS_TOL if size else np.ones(len(subsets), bool)
        )
        for i in np.flatnonzero(finite & primal_ok & dual_ok):
            lam_full = np.zeros(p.m)
            subset = subsets[i]
            if size:
                lam_full[list(subset)] = lams[i]
            residual = kkt_residual(p, xs[i], lam_full)
            if best is None or residual < best[0]:
                best = (residual, xs[i], lam_full, subset)
    if best is None:
        raise NoCertificate("no active set yields a feasible primal-dual candidate")

    _, x, lam_full, subset = best
    active = tuple(subset)
    inactive = [i for i in range(p.m) if i not in subset]
    slack = p.b - p.A @ x if p.m else np.zeros(0)
    min_active_mult = float(np.min(lam_full[list(active)])) if active else np.inf
    min_inactive_slack = float(np.min(slack[inactive])) if inactive else np.inf
    strict = min_active_mult > _STRICT_MARGIN and min_inactive_slack > _STRICT_MARGIN
    certified = check_solution(p, x, lam_full, _FEAS_TOL, _FEAS_TOL)
    return OracleResult(
        x=x,
        multipliers=lam_full,
        active_set=active,
        strictly_complementary=strict,
        certified=certified,
    )


def certified_candidates(p: AviProblem) -> list[tuple[tuple[int, ...], np.ndarray, np.ndarray]]:
    """All subsets whose KKT candidate passes primal and dual feasibility.

    Used by uniqueness tests: on a strictly complementary instance exactly
    one subset passes.  Returns (subset, x, full multipliers) triples in
    size-then-lexicographic order.
    """
    if p.m > _MAX_CONSTRAINTS:
        raise TooLarge(f"oracle limited to m <= {_MAX_CONSTRAINTS}, got m = {p.m}")
    row_norms = np.linalg.norm(p.A, axis=1) if p.m else np.zeros(0)
    passing = []
    for size in range(0, min(p.n, p.m) + 1):
        subsets = _independent_subsets(p.A, size, row_norms)
        if not subsets:
            continue
        xs, lams = _solve_batch(p, subsets)
        for i, subset in enumerate(subsets):
            if not np.all(np.isfinite(xs[i])):
                continue
            if size and not np.all(np.isfinite(lams[i])):
                continue
            if p.m and np.min(p.b - p.A @ xs[i]) < -_FEAS_TOL:
                continue
            if size and np.min(lams[i]) < -_FEAS_TOL:
                continue
            lam_full = np.zeros(p.m)
            if size:
                lam_full[list(subset)] = lams[i]
            passing.append((tuple(subset), xs[i], lam_full))
    return passing
