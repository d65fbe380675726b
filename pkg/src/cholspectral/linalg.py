"""Dense K x K linear algebra behind the Cholesky-reformulated objective.

The objective is ``J(U) = Tr((U R^-1)^T L (U R^-1))`` where ``R`` is the
upper Cholesky factor of ``U^T U``; it only depends on the column span of
``U``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .exceptions import RankDeficiencyError

__all__ = [
    "apply_operator",
    "qr_semi_orthogonal",
    "cholesky_upper",
    "orthogonalize",
    "objective_J",
    "grad_J_full",
    "cholesky_backward",
]


def apply_operator(op, X: np.ndarray) -> np.ndarray:
    """Apply a Laplacian-like operator (anything with ``.dot``, a sparse matrix or an ndarray)."""
    if isinstance(op, np.ndarray):
        return op @ X
    return op.dot(X)


def qr_semi_orthogonal(A: np.ndarray, rtol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Thin Householder QR with the sign convention ``diag(R) > 0``.

    Raises
    ------
    RankDeficiencyError
        If some ``|R_kk|`` falls below ``rtol * ||A||_F``.
    """
    A = np.asarray(A, dtype=np.float64)
    N, K = A.shape
    if K > N:
        raise RankDeficiencyError(f"cannot orthogonalize {N}x{K}: more columns than rows")
    Q, R = np.linalg.qr(A, mode="reduced")
    d = np.diag(R)
    scale = np.linalg.norm(A)
    if K and (scale == 0 or np.min(np.abs(d)) <= rtol * scale):
        raise RankDeficiencyError("matrix is numerically rank deficient")
    s = np.where(d < 0, -1.0, 1.0)
    return Q * s, R * s[:, None]


def cholesky_upper(M: np.ndarray) -> np.ndarray:
    """Upper-triangular ``R`` with ``R^T R = M`` and positive diagonal."""
    M = np.asarray(M, dtype=np.float64)
    try:
        R = sla.cholesky(0.5 * (M + M.T), lower=False, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise RankDeficiencyError(f"Gram matrix is not positive definite: {exc}") from None
    if np.any(np.diag(R) <= 0):
        raise RankDeficiencyError("Gram matrix is not positive definite")
    return R


def orthogonalize(U: np.ndarray, R: np.ndarray | None = None) -> np.ndarray:
    """Return ``Q = U R^-1`` (``R`` defaults to the Cholesky factor of ``U^T U``)."""
    if R is None:
        R = cholesky_upper(U.T @ U)
    return sla.solve_triangular(R, U.T, trans="T", lower=False).T


def objective_J(U: np.ndarray, L) -> float:
    """Evaluate ``Tr(Q^T L Q)`` with ``Q = U R^-1``."""
    Q = orthogonalize(U)
    return float(np.sum(Q * apply_operator(L, Q)))


def cholesky_backward(R: np.ndarray, R_bar: np.ndarray) -> np.ndarray:
    """Pull a gradient on the upper Cholesky factor back to the symmetric input.

    Given ``M = R^T R`` and ``R_bar = dJ/dR`` (only the upper triangle is
    used), returns the symmetric ``M_bar`` such that ``dJ = <M_bar, dM>`` for
    every symmetric perturbation ``dM``.
    """
    # Work with the lower factor C = R^T and C_bar = R_bar^T.
    K = R.shape[0]
    C_bar = np.tril(R_bar.T)
    phi = R @ C_bar
    phi = np.tril(phi) - 0.5 * np.diag(np.diag(phi))
    tmp = sla.solve_triangular(R, phi, lower=False)
    S = sla.solve_triangular(R, tmp.T, lower=False).T
    if K == 0:
        return S
    return 0.5 * (S + S.T)


def grad_J_full(U: np.ndarray, L) -> np.ndarray:
    """Exact gradient of the objective, including the dependence of ``R`` on ``U``.

    The direct term treats ``R`` as fixed; the second term back-propagates
    ``dJ/dR`` through the Cholesky factorization of ``M = U^T U``.
    """
    U = np.asarray(U, dtype=np.float64)
    R = cholesky_upper(U.T @ U)
    Q = orthogonalize(U, R)
    G_Q = 2.0 * apply_operator(L, Q)
    # G_Q R^-T
    direct = sla.solve_triangular(R, G_Q.T, lower=False).T
    R_bar = -Q.T @ direct
    M_bar = cholesky_backward(R, np.triu(R_bar))
    return direct + 2.0 * U @ M_bar
