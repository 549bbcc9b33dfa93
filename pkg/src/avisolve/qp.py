"""Warm-startable dual active-set method for strictly convex QPs.

Solves

    minimize   0.5 * y' G y + g' y
    subject to A y <= b

with G symmetric positive definite.  The Hessian is factored once in
:func:`qp_setup` and reused across every subsequent :func:`qp_solve` call on
the same workspace; only the linear term ``g`` changes between calls.  That
is the access pattern of the outer splitting iteration, which solves a long
sequence of QPs differing in ``g`` alone.

The method works on the dual: it starts from the unconstrained minimizer (or
from the working set left by the previous solve), and repeatedly picks a
violated constraint, then takes the largest step toward satisfying it that
keeps the working-set multipliers nonnegative, dropping blocking constraints
along the way.  Iterates stay dual feasible throughout, so a warm start from
a nearly correct working set costs almost nothing.

State per working set: the indices themselves, the matrix ``W = G^{-1} A_S'``
column by column, and a Cholesky factor of ``M = A_S W``.  Adding a
constraint extends the Cholesky factor by one row; dropping one triggers a
dense refactorization of the (small) reduced Hessian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CycleLimit, DimensionMismatch, Infeasible
from .linalg import SpdFactor, factor_spd

__all__ = ["QpWorkspace", "QpResult", "qp_setup", "qp_solve"]

# Dual feasibility slack: working-set multipliers may dip this far below zero.
_EPS_DUAL = 1e-10
# Relative scale for the primal feasibility tolerance (times 1 + max|b|).
_EPS_PRIMAL_REL = 1e-8
# A candidate row counts as dependent on the working set when the squared
# norm of its reduced direction falls below this fraction of a' G^{-1} a.
_DEP_REL = 1e-20


@dataclass
class QpResult:
    """Outcome of one QP solve.

    y : primal minimizer.
    multipliers : full-length dual vector, zero off the working set.
    active_set : sorted constraint indices in the final working set.
    inner_iterations : working-set changes (adds plus drops) this call.
    """

    y: np.ndarray
    multipliers: np.ndarray
    active_set: tuple[int, ...]
    inner_iterations: int


class QpWorkspace:
    """Factored Hessian plus constraint data plus persistent working set."""

    def __init__(self, factor: SpdFactor, A: np.ndarray, b: np.ndarray):
        self.hessian_factor = factor
        self.A = A
        self.b = b
        self.n = factor.n
        self.m = A.shape[0]
        self.eps_primal = _EPS_PRIMAL_REL * (1.0 + (np.max(np.abs(b)) if self.m else 0.0))
        self.eps_dual = _EPS_DUAL
        # selection scale: 1 + Euclidean norm of each constraint row
        self._row_scale = 1.0 + np.linalg.norm(A, axis=1) if self.m else np.zeros(0)
        self._S: list[int] = []
        self._W = np.zeros((self.n, 0))
        self._L = np.zeros((0, 0))
        self._change_count = 0
        self.total_inner_iterations = 0

    @property
    def working_set(self) -> tuple[int, ...]:
        return tuple(self._S)

    # -- working-set bookkeeping -------------------------------------------

    def set_working_set(self, indices) -> None:
        """Reset the working set, skipping rows dependent on earlier ones.

        Used for cold starts and to rewind the state after a rejected
        acceleration step in the outer solver.  Rebuild work is not charged
        to the iteration counters.
        """
        saved = (self._change_count, self.total_inner_iterations)
        self._S = []
        self._W = np.zeros((self.n, 0))
        self._L = np.zeros((0, 0))
        for i in indices:
            i = int(i)
            if not 0 <= i < self.m:
                raise DimensionMismatch(f"constraint index {i} out of range")
            a = self.A[i]
            w = self.hessian_factor.solve(a)
            aw = float(a @ w)
            if aw <= 0.0:
                continue  # zero row carries no geometry
            if self._S:
                u = self.A[self._S] @ w
                l = scipy.linalg.solve_triangular(self._L, u, lower=True, check_finite=False)
                d2 = aw - float(l @ l)
            else:
                l = np.zeros(0)
                d2 = aw
            if d2 <= _DEP_REL * aw:
                continue
            self._append(i, w, l, np.sqrt(d2))
        self._change_count, self.total_inner_iterations = saved

    def _append(self, idx: int, w: np.ndarray, l: np.ndarray, d: float) -> None:
        q = len(self._S)
        grown = np.zeros((q + 1, q + 1))
        grown[:q, :q] = self._L
        grown[q, :q] = l
        grown[q, q] = d
        self._L = grown
        self._W = np.hstack([self._W, w[:, None]])
        self._S.append(idx)
        self._change_count += 1
        self.total_inner_iterations += 1

    def _drop(self, pos: int) -> None:
        self._S.pop(pos)
        self._W = np.delete(self._W, pos, axis=1)
        self._refactor()
        self._change_count += 1
        self.total_inner_iterations += 1

    def _refactor(self) -> None:
        q = len(self._S)
        if q == 0:
            self._L = np.zeros((0, 0))
            return
        M = self.A[self._S] @ self._W
        M = 0.5 * (M + M.T)
        try:
            self._L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            # working set degraded numerically: rebuild it row by row
            self.set_working_set(list(self._S))

    def _msolve(self, u: np.ndarray) -> np.ndarray:
        """Solve M r = u against the Cholesky factor of A_S W."""
        l = scipy.linalg.solve_triangular(self._L, u, lower=True, check_finite=False)
        return scipy.linalg.solve_triangular(self._L.T, l, lower=False, check_finite=False)

    def _eqp(self, g0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Equality-constrained solve on the current working set.

        g0 is G^{-1} g.  Returns (y, lam_S) with A_S y = b_S and
        G y + g + A_S' lam_S = 0.
        """
        if not self._S:
            return -g0.copy(), np.zeros(0)
        rhs = self.b[self._S] + self.A[self._S] @ g0
        lam = -self._msolve(rhs)
        y = -g0 - self._W @ lam
        return y, lam


def qp_setup(hessian: np.ndarray, A: np.ndarray, b: np.ndarray) -> QpWorkspace:
    """Validate shapes, factor the Hessian, and return a reusable workspace."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    factor = factor_spd(hessian)
    n = factor.n
    if A.ndim != 2 or A.shape[1] != n:
        raise DimensionMismatch(f"constraint matrix shape {A.shape} incompatible with n={n}")
    if b.shape != (A.shape[0],):
        raise DimensionMismatch(f"rhs shape {b.shape} incompatible with {A.shape[0]} constraints")
    return QpWorkspace(factor, A, b)


def qp_solve(ws: QpWorkspace, linear_term: np.ndarray, warm_start: bool = True) -> QpResult:
    """Minimize 0.5 y'Gy + g'y over Ay <= b using the workspace state.

    With ``warm_start`` the solve begins from the working set left by the
    previous call; otherwise the working set is cleared first.  Raises
    Infeasible when the constraints admit no point, and CycleLimit if the
    number of working-set changes exceeds 100 * (m + n).
    """
    g = np.asarray(linear_term, dtype=float)
    if g.shape != (ws.n,):
        raise DimensionMismatch(f"linear term shape {g.shape}, expected ({ws.n},)")
    if not warm_start and ws._S:
        ws.set_working_set([])

    start_changes = ws._change_count
    cap = 100 * (ws.m + ws.n)
    g0 = ws.hessian_factor.solve(g)

    # Phase 1: re-solve on the inherited working set, shedding constraints
    # whose multipliers come out negative under the new linear term.
    y, lam = ws._eqp(g0)
    while lam.size and float(np.min(lam)) < -ws.eps_dual:
        ws._drop(int(np.argmin(lam)))
        if ws._change_count - start_changes > cap:
            raise CycleLimit("working-set change budget exhausted in warm phase")
        y, lam = ws._eqp(g0)

    # Phase 2: dual active-set main loop.
    zero_steps = 0
    while ws.m:
        viol = ws.A @ y - ws.b
        if float(np.max(viol)) <= ws.eps_primal:
            break
        if zero_steps >= ws.m + ws.n:
            # anti-cycling: fall back to smallest violated index
            p = int(np.flatnonzero(viol > ws.eps_primal)[0])
        else:
            scaled = np.where(viol > ws.eps_primal, viol / ws._row_scale, -np.inf)
            p = int(np.argmax(scaled))
        a_p = ws.A[p]
        acc = 0.0  # multiplier accumulated for the entering constraint
        while True:
            if ws._change_count - start_changes > cap:
                raise CycleLimit("working-set change budget exhausted")
            vp = float(a_p @ y - ws.b[p])
            if vp <= ws.eps_primal:
                break  # resolved by drops taken along the way
            w = ws.hessian_factor.solve(a_p)
            aw = float(a_p @ w)
            q = len(ws._S)
            if q:
                u = ws.A[ws._S] @ w
                l = scipy.linalg.solve_triangular(ws._L, u, lower=True, check_finite=False)
                r = scipy.linalg.solve_triangular(ws._L.T, l, lower=False, check_finite=False)
                d2 = aw - float(l @ l)
                z = w - ws._W @ r
            else:
                l = np.zeros(0)
                r = np.zeros(0)
                d2 = aw
                z = w

            positive = np.flatnonzero(r > 0.0)
            if d2 > _DEP_REL * aw and d2 > 0.0:
                t_full = vp / d2
                if positive.size:
                    ratios = lam[positive] / r[positive]
                    t_drop = float(np.min(ratios))
                    # ties broken toward the smallest constraint index
                    tied = positive[np.flatnonzero(ratios <= t_drop)]
                    k = int(min(tied, key=lambda pos: ws._S[pos]))
                else:
                    t_drop = np.inf
                    k = -1
                t = min(t_full, t_drop)
                zero_steps = 0 if t > 0.0 else zero_steps + 1
                y = y - t * z
                if q:
                    lam = lam - t * r
                acc += t
                if t_full <= t_drop:
                    ws._append(p, w, l, np.sqrt(d2))
                    lam = np.append(lam, acc)
                    break
                ws._drop(k)
                lam = np.delete(lam, k)
            else:
                # the entering row is dependent on the working set; move in
                # the dual only, or certify infeasibility
                if not positive.size:
                    raise Infeasible(f"constraint {p} is inconsistent with the working set")
                ratios = lam[positive] / r[positive]
                t = float(np.min(ratios))
                tied = positive[np.flatnonzero(ratios <= t)]
                k = int(min(tied, key=lambda pos: ws._S[pos]))
                zero_steps = 0 if t > 0.0 else zero_steps + 1
                lam = lam - t * r
                acc += t
                ws._drop(k)
                lam = np.delete(lam, k)

    # Final polish: re-solving on the settled working set removes the
    # roundoff drift of the incremental updates and makes repeat calls with
    # the same linear term exact no-ops.
    y, lam = ws._eqp(g0)

    multipliers = np.zeros(ws.m)
    if ws._S:
        multipliers[ws._S] = lam
    result = QpResult(
        y=y,
        multipliers=multipliers,
        active_set=tuple(sorted(ws._S)),
        inner_iterations=ws._change_count - start_changes,
    )
    return result
