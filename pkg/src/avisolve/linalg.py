"""Dense factorizations used by the solver stack.

Two factorization routes are provided and kept deliberately separate:

* :func:`factor_spd` computes a root-free LDL^T factorization (unit lower
  triangular L, positive diagonal d, no pivoting) and refuses input whose
  leading pivots are not safely positive.  This is the workhorse for the
  regularized Hessians appearing in the inner quadratic programs, which are
  symmetric positive definite by construction.
* :func:`factor_general` wraps an LU factorization with partial pivoting for
  square systems with no useful structure, such as saddle-point systems
  assembled from an active set.  Singularity is reported as an error rather
  than silently returning garbage.

Both factor objects expose ``solve`` and can be passed to the module-level
:func:`solve`, which dispatches on the factor type.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite, Singular

__all__ = [
    "SpdFactor",
    "GeneralFactor",
    "factor_spd",
    "factor_general",
    "solve",
]

# Relative pivot floor for the LDL^T route, scaled by the mean diagonal.
_PIVOT_REL = 1e-12
# Relative symmetry slack accepted by factor_spd.
_SYM_REL = 1e-12
# Relative U-diagonal floor below which an LU factorization counts as singular.
_SINGULAR_REL = 1e-12


def _require_square(matrix: np.ndarray, op: str) -> np.ndarray:
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionMismatch(f"{op} expects a square matrix, got shape {mat.shape}")
    if mat.shape[0] == 0:
        raise DimensionMismatch(f"{op} expects a nonempty matrix")
    return mat


class SpdFactor:
    """Root-free LDL^T factorization of a symmetric positive definite matrix.

    Attributes
    ----------
    lower : (n, n) ndarray
        Unit lower triangular factor L.
    diag : (n,) ndarray
        Positive pivots d with ``M = L @ diag(d) @ L.T``.
    """

    def __init__(self, lower: np.ndarray, diag: np.ndarray):
        self.lower = lower
        self.diag = diag
        self.n = lower.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve M x = rhs; rhs may be a vector or a matrix of columns."""
        b = np.asarray(rhs, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionMismatch(
                f"rhs has leading dimension {b.shape[0]}, factor is {self.n}x{self.n}"
            )
        y = scipy.linalg.solve_triangular(
            self.lower, b, lower=True, unit_diagonal=True, check_finite=False
        )
        y = (y.T / self.diag).T
        return scipy.linalg.solve_triangular(
            self.lower.T, y, lower=False, unit_diagonal=True, check_finite=False
        )

    def reconstruct(self) -> np.ndarray:
        """Return L @ diag(d) @ L.T, for testing the factorization."""
        return (self.lower * self.diag) @ self.lower.T


class GeneralFactor:
    """LU factorization with partial pivoting of a square nonsingular matrix."""

    def __init__(self, lu: np.ndarray, piv: np.ndarray, n: int):
        self._lu = lu
        self._piv = piv
        self.n = n

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        b = np.asarray(rhs, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionMismatch(
                f"rhs has leading dimension {b.shape[0]}, factor is {self.n}x{self.n}"
            )
        return scipy.linalg.lu_solve((self._lu, self._piv), b, check_finite=False)


def factor_spd(matrix: np.ndarray) -> SpdFactor:
    """Factor a symmetric positive definite matrix as L diag(d) L^T.

    The input must be symmetric to within ``1e-12 * max|M|``; every pivot must
    exceed ``1e-12 * trace(M) / n``.  Violations raise
    :class:`~avisolve.errors.NotPositiveDefinite`, which doubles as the
    positive-definiteness test used elsewhere in the package.
    """
    mat = _require_square(matrix, "factor_spd")
    n = mat.shape[0]
    scale = np.max(np.abs(mat))
    if np.max(np.abs(mat - mat.T)) > _SYM_REL * scale:
        raise NotPositiveDefinite("matrix is not symmetric to working precision")

    pivot_floor = _PIVOT_REL * np.trace(mat) / n
    lower = np.eye(n)
    diag = np.zeros(n)
    for j in range(n):
        if j:
            scaled = lower[j, :j] * diag[:j]
            pivot = mat[j, j] - lower[j, :j] @ scaled
        else:
            pivot = mat[0, 0]
        if pivot <= pivot_floor:
            raise NotPositiveDefinite(
                f"pivot {pivot:.3e} at position {j} is below the positive floor"
            )
        diag[j] = pivot
        if j + 1 < n:
            col = mat[j + 1 :, j]
            if j:
                col = col - lower[j + 1 :, :j] @ scaled
            lower[j + 1 :, j] = col / pivot
    return SpdFactor(lower, diag)


def factor_general(matrix: np.ndarray) -> GeneralFactor:
    """LU-factor a general square matrix, rejecting singular input.

    A factorization counts as singular when any diagonal entry of U falls at
    or below ``1e-12`` times the largest row sum of ``|M|``.
    """
    mat = _require_square(matrix, "factor_general")
    n = mat.shape[0]
    with warnings.catch_warnings():
        # scipy warns on exactly-zero pivots; the check below turns that case
        # (and near-singular ones) into a Singular error instead.
        warnings.simplefilter("ignore")
        lu, piv = scipy.linalg.lu_factor(mat, check_finite=False)
    row_scale = np.max(np.sum(np.abs(mat), axis=1))
    if np.min(np.abs(np.diag(lu))) <= _SINGULAR_REL * row_scale:
        raise Singular("matrix is singular to working precision")
    return GeneralFactor(lu, piv, n)


def solve(factor: SpdFactor | GeneralFactor, rhs: np.ndarray) -> np.ndarray:
    """Solve against a previously computed factor of either kind."""
    if not isinstance(factor, (SpdFactor, GeneralFactor)):
        raise TypeError(f"unsupported factor type {type(factor).__name__}")
    return factor.solve(rhs)
