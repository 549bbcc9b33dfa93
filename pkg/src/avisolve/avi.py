"""Solvers for strongly monotone affine variational inequalities.

The problem: find x in the polyhedron {x : A x <= b} such that

    (H x + f)' (y - x) >= 0   for every feasible y,

with H + H' positive definite.  When H is symmetric this is the optimality
condition of a convex QP; in general H is nonsymmetric and no objective
exists, but the solution is still unique and characterized by the KKT system

    H x + f + A' lam = 0,   0 <= lam  perp  (b - A x) >= 0.

Three solvers are provided:

* :func:`solve_dr` is a splitting iteration.  Each step solves a strictly
  convex QP whose Hessian ``H_tilde = rho I + sym(H)`` is fixed and whose
  linear term depends on the running iterate, then applies a linear update
  through a cached factorization of ``rho I + H``.  Converges linearly; the
  merit ``||y_k - z_k||`` is the stopping signal.
* :func:`solve_dr_daqp` augments the splitting with an active-set
  stabilization heuristic: once the inner QP reports the same active set for
  ``stab_count`` consecutive iterations, the reduced KKT system for that set
  is solved directly.  If the candidate passes the exactness check, the
  solver stops with the exact solution (status Exact); otherwise the
  candidate is accepted as the new iterate only when it strictly improves
  the best merit seen at an acceptance so far.
* :func:`solve_projected_gradient` is a deliberately simple baseline:
  Euclidean projections of explicit gradient steps.  Never exact.

All iteration-level norms are Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite, Singular
from .linalg import GeneralFactor, SpdFactor, factor_general, factor_spd
from .qp import QpWorkspace, qp_setup, qp_solve

__all__ = [
    "STATUS_EXACT",
    "STATUS_TOLERANCE",
    "STATUS_MAXITER",
    "AviProblem",
    "SolverSettings",
    "DrWorkspace",
    "Solution",
    "TraceRecord",
    "IterationTrace",
    "build_dr_workspace",
    "qp_linear_term",
    "dr_update",
    "kkt_active_solve",
    "check_solution",
    "kkt_residual",
    "natural_residual",
    "solve_dr",
    "solve_dr_daqp",
    "solve_projected_gradient",
]

STATUS_EXACT = "Exact"
STATUS_TOLERANCE = "Tolerance"
STATUS_MAXITER = "MaxIter"


@dataclass
class AviProblem:
    """Problem data: matrix H (n x n, generally nonsymmetric), vector f,
    and the polyhedron {x : A x <= b} with A of shape (m x n).

    m = 0 (unconstrained) is allowed; pass A with shape (0, n).
    """

    H: np.ndarray
    f: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.H.ndim != 2 or self.H.shape[0] != self.H.shape[1] or self.H.shape[0] == 0:
            raise DimensionMismatch(f"H must be square and nonempty, got {self.H.shape}")
        n = self.H.shape[0]
        if self.f.shape != (n,):
            raise DimensionMismatch(f"f has shape {self.f.shape}, expected ({n},)")
        if self.A.size == 0:
            self.A = self.A.reshape(0, n)
        if self.A.ndim != 2 or self.A.shape[1] != n:
            raise DimensionMismatch(f"A has shape {self.A.shape}, expected (m, {n})")
        if self.b.shape != (self.A.shape[0],):
            raise DimensionMismatch(
                f"b has shape {self.b.shape}, expected ({self.A.shape[0]},)"
            )
        for name, arr in (("H", self.H), ("f", self.f), ("A", self.A), ("b", self.b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class SolverSettings:
    """Tuning knobs shared by all solvers.

    rho=None and pg_step=None select the automatic choices: rho becomes the
    Frobenius norm of H, and the projected-gradient step becomes mu / L**2
    with mu the smallest eigenvalue of sym(H) and L the Frobenius norm of H.
    """

    rho: float | None = None
    eta: float = 1e-6
    max_iter: int = 10000
    stab_count: int = 5
    eps_primal: float = 1e-8
    eps_dual: float = 1e-8
    pg_step: float | None = None

    def __post_init__(self):
        if self.rho is not None and not self.rho > 0:
            raise ValueError("rho must be positive or None")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.stab_count < 1:
            raise ValueError("stab_count must be at least 1")
        if not (self.eps_primal > 0 and self.eps_dual > 0):
            raise ValueError("exactness tolerances must be positive")
        if self.pg_step is not None and not self.pg_step > 0:
            raise ValueError("pg_step must be positive or None")


@dataclass
class DrWorkspace:
    """Per-solve mutable state for the splitting solvers.

    Not shared between concurrent solves.  delta tracks the best merit seen
    at an accepted correction and is nonincreasing over the solve.
    """

    problem: AviProblem
    h_sym: np.ndarray
    qp_hessian: np.ndarray
    rho: float
    update_factor: GeneralFactor
    qp: QpWorkspace
    h_delta: np.ndarray
    delta: float = np.inf
    stable_streak: int = 0
    last_active_set: tuple[int, ...] | None = None


@dataclass
class Solution:
    """Solver output.

    On status Exact, (x, multipliers) satisfies the KKT system to the
    solver's exactness tolerances and multipliers vanish off active_set.  On
    Tolerance/MaxIter exits the multipliers come from the final inner QP:
    they certify that QP, not the variational inequality itself.
    """

    x: np.ndarray
    multipliers: np.ndarray
    active_set: tuple[int, ...]
    status: str
    iterations: int
    kkt_residual: float


@dataclass
class TraceRecord:
    """One iteration of a solve; active_set is a diagnostic extra.

    dist_to_ref is the distance of the solver's state after the iteration:
    the updated splitting iterate z for the splitting solvers (the object
    the convergence guarantee speaks about) and the stepped iterate for the
    projected-gradient baseline; on a terminating iteration it is the
    distance of the returned solution estimate.
    """

    k: int
    merit: float
    active_set_size: int
    newton_attempted: bool
    newton_accepted: bool
    inner_qp_iters: int
    dist_to_ref: float | None = None
    active_set: tuple[int, ...] = ()


@dataclass
class IterationTrace:
    """Per-iteration records; one record per iteration performed."""

    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    def merits(self) -> np.ndarray:
        return np.array([r.merit for r in self.records])

    def dists(self) -> np.ndarray:
        """dist_to_ref per iteration, NaN where no reference was supplied."""
        return np.array(
            [np.nan if r.dist_to_ref is None else r.dist_to_ref for r in self.records]
        )

    def accepted_merits(self) -> list[float]:
        return [r.merit for r in self.records if r.newton_accepted]

    def iterations_to(self, tol: float) -> int | None:
        """Iterations needed for dist_to_ref to reach tol; None if never."""
        for r in self.records:
            if r.dist_to_ref is not None and r.dist_to_ref <= tol:
                return r.k + 1
        return None


# ---------------------------------------------------------------------------
# workspace construction and per-iteration pieces


def build_dr_workspace(p: AviProblem, s: SolverSettings) -> DrWorkspace:
    """Factor everything the splitting iteration needs.

    Checks the standing assumption (sym(H) positive definite) first; a
    violation surfaces as NotPositiveDefinite.  rho defaults to the
    Frobenius norm of H.
    """
    h_sym = 0.5 * (p.H + p.H.T)
    factor_spd(h_sym)  # assumption check; raises NotPositiveDefinite
    rho = float(s.rho) if s.rho is not None else float(np.linalg.norm(p.H, "fro"))
    eye = np.eye(p.n)
    qp_hessian = rho * eye + h_sym
    workspace = DrWorkspace(
        problem=p,
        h_sym=h_sym,
        qp_hessian=qp_hessian,
        rho=rho,
        update_factor=factor_general(rho * eye + p.H),
        qp=qp_setup(qp_hessian, p.A, p.b),
        h_delta=p.H - qp_hessian,
    )
    return workspace


def qp_linear_term(ws: DrWorkspace, z: np.ndarray) -> np.ndarray:
    """Linear term of the inner QP at iterate z: f + (H - H_tilde) z."""
    z = np.asarray(z, dtype=float)
    if z.shape != (ws.problem.n,):
        raise DimensionMismatch(f"z has shape {z.shape}, expected ({ws.problem.n},)")
    return ws.problem.f + ws.h_delta @ z


def dr_update(ws: DrWorkspace, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Averaging step: (rho I + H)^{-1} (rho y + H z + 0.5 sym(H) (y - z))."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    n = ws.problem.n
    if y.shape != (n,) or z.shape != (n,):
        raise DimensionMismatch("y and z must both have length n")
    rhs = ws.rho * y + ws.problem.H @ z + 0.5 * (ws.h_sym @ (y - z))
    return ws.update_factor.solve(rhs)


def kkt_active_solve(p: AviProblem, act) -> tuple[np.ndarray, np.ndarray]:
    """Solve the reduced KKT system for a candidate active set.

    Assembles [[H, A_act'], [A_act, 0]] [x; lam] = [-f; b_act] and solves it
    with an LU factorization.  Raises Singular when the active rows are
    dependent (the caller treats that as "no correction available").
    Multipliers are returned for the active rows only, in sorted index
    order; callers scatter them into a full vector.
    """
    indices = sorted(int(i) for i in act)
    if len(set(indices)) != len(indices):
        raise DimensionMismatch("active set contains repeated indices")
    if indices and (indices[0] < 0 or indices[-1] >= p.m):
        raise DimensionMismatch("active set index out of range")
    n, q = p.n, len(indices)
    K = np.zeros((n + q, n + q))
    K[:n, :n] = p.H
    if q:
        K[:n, n:] = p.A[indices].T
        K[n:, :n] = p.A[indices]
    rhs = np.concatenate([-p.f, p.b[indices]])
    sol = factor_general(K).solve(rhs)
    return sol[:n], sol[n:]


def check_solution(
    p: AviProblem,
    x: np.ndarray,
    multipliers: np.ndarray,
    eps_primal: float,
    eps_dual: float,
) -> bool:
    """Exactness test for a primal-dual pair.

    True iff stationarity holds within eps_dual * (1 + max|f|), primal
    feasibility and complementarity within eps_primal * (1 + max|b|), and
    multipliers are above -eps_dual.
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(multipliers, dtype=float)
    if x.shape != (p.n,) or lam.shape != (p.m,):
        raise DimensionMismatch("solution candidate has wrong dimensions")
    f_scale = 1.0 + (np.max(np.abs(p.f)) if p.n else 0.0)
    stat = p.H @ x + p.f + (p.A.T @ lam if p.m else 0.0)
    if np.max(np.abs(stat)) > eps_dual * f_scale:
        return False
    if p.m == 0:
        return True
    b_scale = 1.0 + np.max(np.abs(p.b))
    slack = p.b - p.A @ x
    if np.min(slack) < -eps_primal * b_scale:
        return False
    if np.min(lam) < -eps_dual:
        return False
    return bool(np.max(np.abs(lam * slack)) <= eps_primal * b_scale)


def kkt_residual(p: AviProblem, x: np.ndarray, multipliers: np.ndarray) -> float:
    """Scaled KKT residual; the largest scaled violation over the four
    conditions tested by check_solution (zero at an exact solution)."""
    x = np.asarray(x, dtype=float)
    lam = np.asarray(multipliers, dtype=float)
    f_scale = 1.0 + np.max(np.abs(p.f))
    stat = p.H @ x + p.f + (p.A.T @ lam if p.m else 0.0)
    parts = [float(np.max(np.abs(stat))) / f_scale]
    if p.m:
        b_scale = 1.0 + np.max(np.abs(p.b))
        slack = p.b - p.A @ x
        parts.append(max(0.0, float(-np.min(slack))) / b_scale)
        parts.append(max(0.0, float(-np.min(lam))))
        parts.append(float(np.max(np.abs(lam * slack))) / b_scale)
    return max(parts)


def natural_residual(p: AviProblem, z: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Weighted natural residual z - Proj_Q(z - Q^{-1}(Hz + f)).

    Proj_Q is the projection onto the feasible set in the norm induced by
    the SPD weight Q, computed as a QP with Hessian Q.  The residual is zero
    exactly at the solution.  With Q equal to the splitting Hessian
    rho I + sym(H), this equals z minus the inner-QP solution at z.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (p.n,):
        raise DimensionMismatch(f"z has shape {z.shape}, expected ({p.n},)")
    Q = np.asarray(Q, dtype=float)
    q_factor = factor_spd(Q)
    v = z - q_factor.solve(p.H @ z + p.f)
    ws = qp_setup(Q, p.A, p.b)
    res = qp_solve(ws, -(Q @ v), warm_start=False)
    return z - res.y


# ---------------------------------------------------------------------------
# solvers


def _initial_iterate(p: AviProblem, z0) -> np.ndarray:
    if z0 is None:
        return np.zeros(p.n)
    z = np.asarray(z0, dtype=float)
    if z.shape != (p.n,):
        raise DimensionMismatch(f"z0 has shape {z.shape}, expected ({p.n},)")
    return z.copy()


def _distance(x: np.ndarray, reference) -> float | None:
    if reference is None:
        return None
    return float(np.linalg.norm(x - reference))


def solve_dr(
    p: AviProblem,
    s: SolverSettings | None = None,
    z0=None,
    reference=None,
) -> tuple[Solution, IterationTrace]:
    """Plain splitting iteration without active-set acceleration.

    Stops with status Tolerance once ||y_k - z_k|| <= eta, returning y_k and
    the final QP's multipliers, or MaxIter at the iteration cap.  When
    ``reference`` is given, per-iteration distances to it are traced.
    """
    s = s if s is not None else SolverSettings()
    ws = build_dr_workspace(p, s)
    z = _initial_iterate(p, z0)
    trace = IterationTrace()
    for k in range(s.max_iter):
        res = qp_solve(ws.qp, qp_linear_term(ws, z), warm_start=True)
        y = res.y
        merit = float(np.linalg.norm(y - z))
        if merit <= s.eta:
            trace.append(
                TraceRecord(
                    k=k,
                    merit=merit,
                    active_set_size=len(res.active_set),
                    newton_attempted=False,
                    newton_accepted=False,
                    inner_qp_iters=res.inner_iterations,
                    dist_to_ref=_distance(y, reference),
                    active_set=res.active_set,
                )
            )
            sol = Solution(
                x=y,
                multipliers=res.multipliers,
                active_set=res.active_set,
                status=STATUS_TOLERANCE,
                iterations=k + 1,
                kkt_residual=kkt_residual(p, y, res.multipliers),
            )
            return sol, trace
        z = dr_update(ws, y, z)
        trace.append(
            TraceRecord(
                k=k,
                merit=merit,
                active_set_size=len(res.active_set),
                newton_attempted=False,
                newton_accepted=False,
                inner_qp_iters=res.inner_iterations,
                dist_to_ref=_distance(z, reference),
                active_set=res.active_set,
            )
        )
    sol = Solution(
        x=y,
        multipliers=res.multipliers,
        active_set=res.active_set,
        status=STATUS_MAXITER,
        iterations=s.max_iter,
        kkt_residual=kkt_residual(p, y, res.multipliers),
    )
    return sol, trace


def _newton_candidate(p: AviProblem, act: tuple[int, ...]):
    """Reduced KKT solve for act, or None when the system is unavailable.

    Returns (x, full multipliers) on success.  Oversized or rank-deficient
    active sets yield None; the caller then falls back to splitting steps.
    """
    if len(act) > p.n:
        return None
    try:
        x, lam_act = kkt_active_solve(p, act)
    except Singular:
        return None
    lam = np.zeros(p.m)
    if act:
        lam[list(act)] = lam_act
    return x, lam


def solve_dr_daqp(
    p: AviProblem,
    s: SolverSettings | None = None,
    z0=None,
    reference=None,
    warm_start: bool = True,
) -> tuple[Solution, IterationTrace]:
    """Splitting iteration with active-set stabilization and exact exits.

    Per iteration: solve the inner QP at z_k (warm-started), track how long
    the reported active set has been unchanged, and once the streak reaches
    ``stab_count``, solve the reduced KKT system for that set.  A candidate
    that passes check_solution ends the solve with status Exact.  Otherwise
    a second QP solve at the candidate point decides acceptance: the pair
    (candidate, its QP solution) replaces (z_k, y_k) only when its merit
    strictly improves the best accepted merit so far.  A failed or rejected
    attempt resets the streak and rewinds the QP working set to the
    pre-attempt active set.

    Near-converged iterates get one last chance at an exact exit: when the
    merit falls below eta, the reduced KKT system for the current set is
    solved and checked before settling for status Tolerance.

    ``warm_start=False`` forces every inner QP to start from an empty
    working set (used for warm-vs-cold comparisons).
    """
    s = s if s is not None else SolverSettings()
    ws = build_dr_workspace(p, s)
    z = _initial_iterate(p, z0)
    trace = IterationTrace()
    for k in range(s.max_iter):
        res = qp_solve(ws.qp, qp_linear_term(ws, z), warm_start=warm_start)
        y = res.y
        act = res.active_set
        lam = res.multipliers
        qp_iters = res.inner_iterations

        # no attempt can fire at k = 0: the previous set is a sentinel
        if ws.last_active_set is not None and act == ws.last_active_set:
            ws.stable_streak += 1
        else:
            ws.stable_streak = 0

        attempted = False
        accepted = False
        exact = None
        if ws.stable_streak >= s.stab_count:
            attempted = True
            pre_attempt_set = act
            candidate = _newton_candidate(p, act)
            correction_ran = False
            if candidate is not None:
                x_c, lam_c = candidate
                if check_solution(p, x_c, lam_c, s.eps_primal, s.eps_dual):
                    exact = candidate
                else:
                    res2 = qp_solve(ws.qp, qp_linear_term(ws, x_c), warm_start=warm_start)
                    correction_ran = True
                    qp_iters += res2.inner_iterations
                    new_merit = float(np.linalg.norm(res2.y - x_c))
                    if new_merit < ws.delta:
                        ws.delta = new_merit
                        z = x_c
                        y = res2.y
                        act = res2.active_set
                        lam = res2.multipliers
                        accepted = True
            if exact is None and not accepted:
                ws.stable_streak = 0
                if correction_ran:
                    ws.qp.set_working_set(pre_attempt_set)

        merit = float(np.linalg.norm(y - z))

        # near-convergence polish: certify the current active set before
        # falling back to an inexact exit
        if exact is None and merit <= s.eta and (accepted or not attempted):
            attempted = True
            candidate = _newton_candidate(p, act)
            if candidate is not None and check_solution(
                p, candidate[0], candidate[1], s.eps_primal, s.eps_dual
            ):
                exact = candidate

        if exact is not None or merit <= s.eta:
            x_report = exact[0] if exact is not None else y
            trace.append(
                TraceRecord(
                    k=k,
                    merit=merit,
                    active_set_size=len(act),
                    newton_attempted=attempted,
                    newton_accepted=accepted,
                    inner_qp_iters=qp_iters,
                    dist_to_ref=_distance(x_report, reference),
                    active_set=act,
                )
            )
            if exact is not None:
                x_c, lam_c = exact
                sol = Solution(
                    x=x_c,
                    multipliers=lam_c,
                    active_set=act,
                    status=STATUS_EXACT,
                    iterations=k + 1,
                    kkt_residual=kkt_residual(p, x_c, lam_c),
                )
            else:
                sol = Solution(
                    x=y,
                    multipliers=lam,
                    active_set=act,
                    status=STATUS_TOLERANCE,
                    iterations=k + 1,
                    kkt_residual=kkt_residual(p, y, lam),
                )
            return sol, trace

        ws.last_active_set = act
        z = dr_update(ws, y, z)
        trace.append(
            TraceRecord(
                k=k,
                merit=merit,
                active_set_size=len(act),
                newton_attempted=attempted,
                newton_accepted=accepted,
                inner_qp_iters=qp_iters,
                dist_to_ref=_distance(z, reference),
                active_set=act,
            )
        )
    sol = Solution(
        x=y,
        multipliers=lam,
        active_set=act,
        status=STATUS_MAXITER,
        iterations=s.max_iter,
        kkt_residual=kkt_residual(p, y, lam),
    )
    return sol, trace


def _smallest_sym_eigenvalue(h_sym: np.ndarray) -> float:
    """Smallest eigenvalue of an SPD matrix by bisection on factor_spd.

    Finds the largest shift sigma with h_sym - sigma I still positive
    definite; 60 halvings of the Frobenius-norm bracket leave no practical
    slack.  Raises NotPositiveDefinite if h_sym itself is not SPD.
    """
    factor_spd(h_sym)
    n = h_sym.shape[0]
    eye = np.eye(n)
    lo = 0.0
    hi = float(np.linalg.norm(h_sym, "fro"))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        try:
            factor_spd(h_sym - mid * eye)
            lo = mid
        except NotPositiveDefinite:
            hi = mid
    return max(lo, hi * 2.0**-60)


def solve_projected_gradient(
    p: AviProblem,
    s: SolverSettings | None = None,
    z0=None,
    reference=None,
) -> tuple[Solution, IterationTrace]:
    """Projected-gradient baseline: x+ = Proj(x - alpha (Hx + f)).

    The Euclidean projection reuses the warm-started QP machinery with an
    identity Hessian.  The automatic step is mu / L**2 (mu the smallest
    eigenvalue of sym(H), L the Frobenius norm of H), the classical strongly
    monotone choice.  Exits Tolerance when ||x+ - x|| <= eta, else MaxIter;
    never Exact.  Multipliers certify the final projection QP only.
    """
    s = s if s is not None else SolverSettings()
    h_sym = 0.5 * (p.H + p.H.T)
    if s.pg_step is not None:
        alpha = float(s.pg_step)
        factor_spd(h_sym)  # assumption check
    else:
        mu = _smallest_sym_eigenvalue(h_sym)
        big_l = float(np.linalg.norm(p.H, "fro"))
        alpha = mu / big_l**2
    proj = qp_setup(np.eye(p.n), p.A, p.b)
    x = _initial_iterate(p, z0)
    trace = IterationTrace()
    for k in range(s.max_iter):
        target = x - alpha * (p.H @ x + p.f)
        res = qp_solve(proj, -target, warm_start=True)
        x_new = res.y
        merit = float(np.linalg.norm(x_new - x))
        trace.append(
            TraceRecord(
                k=k,
                merit=merit,
                active_set_size=len(res.active_set),
                newton_attempted=False,
                newton_accepted=False,
                inner_qp_iters=res.inner_iterations,
                dist_to_ref=_distance(x_new, reference),
                active_set=res.active_set,
            )
        )
        if merit <= s.eta:
            sol = Solution(
                x=x_new,
                multipliers=res.multipliers,
                active_set=res.active_set,
                status=STATUS_TOLERANCE,
                iterations=k + 1,
                kkt_residual=kkt_residual(p, x_new, res.multipliers),
            )
            return sol, trace
        x = x_new
    sol = Solution(
        x=x_new,
        multipliers=res.multipliers,
        active_set=res.active_set,
        status=STATUS_MAXITER,
        iterations=s.max_iter,
        kkt_residual=kkt_residual(p, x_new, res.multipliers),
    )
    return sol, trace
