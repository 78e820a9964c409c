"""Dense symmetric eigen-decomposition, SPD solves and thin QR.

All kernels are thin wrappers around LAPACK through :mod:`scipy.linalg` that
validate their inputs and translate LAPACK failures into riptrm errors.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.linalg

from riptrm.errors import (
    InvalidInputError,
    NotPositiveDefiniteError,
    RankDeficientError,
)
from riptrm.linalg.models import SymEigResult, ThinQR

logger = logging.getLogger(__name__)

SYMMETRY_RTOL = 1e-12
RANK_RTOL = 1e-12


def _as_matrix(a: np.ndarray, name: str) -> np.ndarray:
    matrix = np.asarray(a, dtype=float)
    if matrix.ndim != 2:
        msg = f"{name} must be two-dimensional, got shape {matrix.shape}"
        raise InvalidInputError(msg)
    if not np.all(np.isfinite(matrix)):
        msg = f"{name} has non-finite entries"
        raise InvalidInputError(msg)
    return matrix


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return ``(A + A^T) / 2``."""
    return 0.5 * (a + a.T)


def check_symmetric(a: np.ndarray, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Validate that ``a`` is square and symmetric to ``rtol`` relative.

    Returns the symmetrised matrix so callers absorb roundoff.
    """
    matrix = _as_matrix(a, "A")
    rows, cols = matrix.shape
    if rows != cols:
        msg = f"A must be square, got shape {matrix.shape}"
        raise InvalidInputError(msg)
    scale = max(1.0, float(np.linalg.norm(matrix)))
    asym = float(np.linalg.norm(matrix - matrix.T))
    if asym > rtol * scale:
        msg = f"A is not symmetric: ||A - A^T|| = {asym:.3e}"
        raise InvalidInputError(msg)
    return symmetrize(matrix)


def sym_eig(a: np.ndarray) -> SymEigResult:
    """Full eigen-decomposition of a symmetric matrix, eigenvalues ascending.

    Parameters
    ----------
    a:
        Square matrix, symmetric to 1e-12 relative.

    Raises
    ------
    InvalidInputError
        If ``a`` is not square or not symmetric.
    """
    matrix = check_symmetric(a)
    n = matrix.shape[0]
    if n == 0:
        return SymEigResult(eigenvalues=np.zeros(0), eigenvectors=np.zeros((0, 0)))
    eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    return SymEigResult(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def min_eigenvalue(a: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix (``+inf`` when empty)."""
    matrix = check_symmetric(a)
    if matrix.shape[0] == 0:
        return float("inf")
    return float(scipy.linalg.eigvalsh(matrix, subset_by_index=[0, 0])[0])


def solve_posdef(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive definite ``A`` via Cholesky.

    Raises
    ------
    NotPositiveDefiniteError
        If the Cholesky factorisation breaks down.
    """
    matrix = check_symmetric(a)
    rhs = np.asarray(b, dtype=float)
    if rhs.shape[0] != matrix.shape[0]:
        msg = f"Dimension mismatch: A is {matrix.shape}, b is {rhs.shape}"
        raise InvalidInputError(msg)
    try:
        factor = scipy.linalg.cho_factor(matrix, lower=True)
    except scipy.linalg.LinAlgError as exc:
        msg = "Matrix is not positive definite"
        raise NotPositiveDefiniteError(msg) from exc
    return scipy.linalg.cho_solve(factor, rhs)


def qr_thin(a: np.ndarray) -> ThinQR:
    """Thin QR factorisation with the sign convention ``diag(R) >= 0``.

    Raises
    ------
    RankDeficientError
        If some ``|R_ii|`` falls below ``1e-12 * ||A||``.
    """
    matrix = _as_matrix(a, "A")
    n, k = matrix.shape
    if n < k:
        msg = f"qr_thin needs n >= k, got shape {matrix.shape}"
        raise InvalidInputError(msg)
    q, r = scipy.linalg.qr(matrix, mode="economic")
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    q = q * signs
    r = signs[:, None] * r
    threshold = RANK_RTOL * max(float(np.linalg.norm(matrix)), np.finfo(float).tiny)
    if k and float(np.min(np.abs(np.diag(r)))) < threshold:
        msg = f"Matrix of shape {matrix.shape} is rank deficient"
        raise RankDeficientError(msg)
    return ThinQR(q=q, r=r)


def null_space_basis(a: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis (as columns) of the null space of ``a`` in ``R^dim``.

    An ``a`` with zero rows yields the identity.
    """
    matrix = np.asarray(a, dtype=float).reshape(-1, dim)
    if matrix.shape[0] == 0:
        return np.eye(dim)
    return scipy.linalg.null_space(matrix)
