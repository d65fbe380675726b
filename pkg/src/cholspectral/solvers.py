"""Deterministic baselines: eigendecomposition and forward-backward with QR retraction.

The stochastic solver lives in :mod:`cholspectral.sgd`. Every solver accepts
anything with ``.dot`` (and ``.toarray`` for the dense eigensolver).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .exceptions import ConfigError, ConvergenceError, RankDeficiencyError
from .linalg import apply_operator, qr_semi_orthogonal
from .report import SolverReport

__all__ = ["DENSE_LIMIT", "SOLVERS", "FbConfig", "embed_eigen", "embed_fb_qr", "operator_norm_bound"]

log = logging.getLogger(__name__)

DENSE_LIMIT = 20_000
SOLVERS = ("eigen", "fb_qr", "sgd_cholesky")


@dataclass
class FbConfig:
    """Settings of :func:`embed_fb_qr`; ``gamma=None`` picks ``1 / ||L||``."""

    steps: int = 3000
    gamma: float | None = None
    seed: int = 0
    trace_period: int = 50


def _n_of(op) -> int:
    if hasattr(op, "n_vertices"):
        return int(op.n_vertices)
    return int(op.shape[0])


def _dense(op) -> np.ndarray:
    if isinstance(op, np.ndarray):
        return op
    return op.toarray()


def embed_eigen(op, K: int, method: str = "dense", return_report: bool = False):
    """Eigenvectors of the ``K`` smallest eigenvalues of a symmetric operator.

    Parameters
    ----------
    op : LaplacianOperator, AggregatedOperator or ndarray
    K : int
    method : {"dense", "arpack"}
        ``"dense"`` materializes the matrix and calls LAPACK (N <= 20 000);
        ``"arpack"`` uses Lanczos iterations on the sparse operator.

    Returns
    -------
    U : ndarray, shape (N, K)
        Orthonormal columns ordered by ascending eigenvalue. With
        ``return_report=True`` a ``(U, SolverReport)`` pair is returned.
    """
    N = _n_of(op)
    if K < 1 or K > N:
        raise ConfigError(f"K={K} must satisfy 1 <= K <= N={N}")
    start = time.perf_counter()
    if method == "dense":
        if N > DENSE_LIMIT:
            raise ConfigError(f"dense eigendecomposition limited to N <= {DENSE_LIMIT} (got {N})")
        A = _dense(op)
        A = 0.5 * (A + A.T)
        try:
            vals, U = sla.eigh(A, subset_by_index=[0, K - 1], driver="evr")
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"eigensolver failed: {exc}") from None
    elif method == "arpack":
        lin = spla.LinearOperator((N, N), matvec=lambda x: apply_operator(op, x), dtype=np.float64)
        try:
            vals, U = spla.eigsh(lin, k=K, which="SA", tol=1e-12, maxiter=max(1000, 20 * N))
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"eigensolver failed: {exc}") from None
        order = np.argsort(vals)
        vals, U = vals[order], U[:, order]
        U, _ = qr_semi_orthogonal(U)
    else:
        raise ConfigError(f"unknown eigen method {method!r}")
    seconds = time.perf_counter() - start
    if not return_report:
        return U
    objective = float(np.sum(U * apply_operator(op, U)))
    return U, SolverReport("eigen", objective, 0, seconds, [(0, objective)], {"eigenvalues": vals.tolist()})


def operator_norm_bound(op) -> float:
    """Upper bound on the spectral radius; used for the default FB step size."""
    if hasattr(op, "norm_bound"):
        return float(op.norm_bound())
    A = op if isinstance(op, np.ndarray) else op.toarray()
    return float(np.max(np.sum(np.abs(A), axis=1))) if A.size else 0.0


def _schedule(step_schedule, op) -> Callable[[int], float]:
    if callable(step_schedule):
        return step_schedule
    if step_schedule is None:
        bound = operator_norm_bound(op)
        gamma = 1.0 / bound if bound > 0 else 1.0
    else:
        gamma = float(step_schedule)
    if not gamma > 0:
        raise ConfigError("step size must be positive")
    return lambda t: gamma


def embed_fb_qr(
    op,
    K: int,
    steps: int = 3000,
    step_schedule: float | Callable[[int], float] | None = None,
    seed: int = 0,
    trace_period: int = 50,
    U0: np.ndarray | None = None,
    max_restarts: int = 3,
) -> tuple[np.ndarray, SolverReport]:
    """Forward-backward iterations ``U <- QR(U - gamma_t L U)``.

    ``step_schedule`` is a constant, a callable ``t -> gamma_t``, or ``None``
    for ``1 / ||L||`` (row-sum bound). A rank collapse restarts from a fresh
    random matrix, at most ``max_restarts`` times.
    """
    N = _n_of(op)
    if K < 1 or K > N:
        raise ConfigError(f"K={K} must satisfy 1 <= K <= N={N}")
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    gamma_t = _schedule(step_schedule, op)
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    for attempt in range(max_restarts + 1):
        X = rng.standard_normal((N, K)) if (U0 is None or attempt) else np.asarray(U0, dtype=np.float64)
        try:
            U, _ = qr_semi_orthogonal(X)
            LU = apply_operator(op, U)
            trace = [(0, float(np.sum(U * LU)))]
            for t in range(steps):
                U, _ = qr_semi_orthogonal(U - gamma_t(t) * LU)
                LU = apply_operator(op, U)
                if (t + 1) % trace_period == 0 or t + 1 == steps:
                    trace.append((t + 1, float(np.sum(U * LU))))
            break
        except RankDeficiencyError:
            log.warning("forward-backward iterate collapsed (attempt %d); restarting", attempt)
    else:
        raise RankDeficiencyError(f"forward-backward failed after {max_restarts} restarts")
    seconds = time.perf_counter() - start
    objective = float(np.sum(U * LU))
    if not math.isfinite(objective):
        raise ConvergenceError("objective became non-finite")
    return U, SolverReport("fb_qr", objective, steps, seconds, trace, {"restarts": attempt})
