"""Mini-batch SGD on the Cholesky-reformulated spectral embedding objective.

Each step samples a batch of edges, moves only the rows of ``U`` incident to
those edges, and updates the K x K Gram matrix ``M = U^T U`` from the
changed rows alone. ``R = chol(M)`` is held fixed within a step, so the batch
gradient of row ``n`` is ``2 (L_batch U)_n M^-1``.

The objective only depends on the column span of ``U``, so the raw gradient
step is not scale free: as ``U`` shrinks, ``M^-1`` grows and the effective
step blows up. By default the gradient is right-multiplied by ``M`` (the
step taken in the frame where ``M = I``) and rescaled by ``|I| / B`` so that
it is an unbiased estimate of the full detached gradient. Both corrections
can be switched off in :class:`SgdConfig`.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .exceptions import ConfigError, ConvergenceError, GraphError, RankDeficiencyError
from .graph_core import EdgeIndexView, SparseGraph, apply_partial_laplacian, edge_index_set
from .linalg import cholesky_upper, objective_J, orthogonalize
from .report import SolverReport

__all__ = [
    "SgdConfig",
    "SgdState",
    "LowRankTerm",
    "init_state",
    "sample_minibatch",
    "stochastic_objective_Jt",
    "stochastic_gradient",
    "detached_full_gradient",
    "graph_laplacian_dot",
    "gram_update",
    "sgd_step",
    "embed_sgd_cholesky",
]

log = logging.getLogger(__name__)

_MAX_PD_FAILURES = 3
# Re-whiten U once diag(R) spreads beyond this ratio or its scale leaves [1/x, x].
_COND_LIMIT = 1e4
_SCALE_LIMIT = 1e6


@dataclass
class SgdConfig:
    """Settings of :func:`embed_sgd_cholesky`.

    Attributes
    ----------
    gamma : float
        Step size (constant, or the base of the ``"inv_sqrt"`` schedule).
    batch_size : int
    iterations : int
    seed : int
    refresh_period : int
        Recompute ``M = U^T U`` exactly every this many steps; ``0`` disables.
    schedule : {"constant", "inv_sqrt"}
    trace_period : int
        Evaluate the full objective every this many steps.
    precondition : bool
        Right-multiply the gradient by ``M`` (scale-free step).
    unbiased : bool
        Multiply the batch gradient by ``|I| / B``.
    """

    gamma: float = 1e-3
    batch_size: int = 4000
    iterations: int = 500
    seed: int = 0
    refresh_period: int = 1000
    schedule: str = "constant"
    trace_period: int = 50
    precondition: bool = True
    unbiased: bool = True

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.refresh_period < 0:
            raise ConfigError("refresh_period must be >= 0")
        if self.trace_period < 1:
            raise ConfigError("trace_period must be >= 1")
        if self.schedule not in ("constant", "inv_sqrt"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")


@dataclass
class LowRankTerm:
    """The dense part ``-alpha * sum_s U^s U^s^T`` of an aggregated multilayer operator."""

    bases: Sequence[np.ndarray]
    alpha: float

    def projections(self, U: np.ndarray) -> list[np.ndarray]:
        return [B.T @ U for B in self.bases]

    def dot(self, X: np.ndarray) -> np.ndarray:
        Y = np.zeros_like(X)
        for B in self.bases:
            Y -= self.alpha * (B @ (B.T @ X))
        return Y


@dataclass
class SgdState:
    U: np.ndarray
    M: np.ndarray
    R: np.ndarray
    t: int
    gamma: float
    batch_size: int
    rng: np.random.Generator
    refresh_period: int = 1000
    schedule: str = "constant"
    precondition: bool = True
    unbiased: bool = True
    # U^s^T U for each layer basis, maintained like M when a low-rank term is present.
    P: list = field(default_factory=list)
    n_rewhiten: int = 0
    n_jitter: int = 0

    def step_size(self) -> float:
        if self.schedule == "inv_sqrt":
            return self.gamma / math.sqrt(self.t + 1)
        return self.gamma

    def gram_drift(self) -> float:
        G = self.U.T @ self.U
        return float(np.linalg.norm(self.M - G) / np.linalg.norm(G))


def init_state(
    N: int,
    K: int,
    config: SgdConfig,
    low_rank: LowRankTerm | None = None,
    U0: np.ndarray | None = None,
) -> SgdState:
    """Random start ``U_0 ~ N(0, 1/N)`` with ``M_0 = U_0^T U_0`` computed once in full."""
    if K < 1 or K > N:
        raise ConfigError(f"K={K} must satisfy 1 <= K <= N={N}")
    rng = np.random.default_rng(config.seed)
    if U0 is None:
        U0 = rng.standard_normal((N, K)) / math.sqrt(N)
    U = np.array(U0, dtype=np.float64)
    if U.shape != (N, K):
        raise ConfigError(f"U0 has shape {U.shape}, expected {(N, K)}")
    M = U.T @ U
    R = cholesky_upper(M)
    P = low_rank.projections(U) if low_rank is not None else []
    return SgdState(
        U=U,
        M=M,
        R=R,
        t=0,
        gamma=config.gamma,
        batch_size=config.batch_size,
        rng=rng,
        refresh_period=config.refresh_period,
        schedule=config.schedule,
        precondition=config.precondition,
        unbiased=config.unbiased,
        P=P,
    )


def sample_minibatch(edges: EdgeIndexView, B: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample of ``min(B, |I|)`` distinct edge positions, drawn afresh each call."""
    n = len(edges)
    if n == 0:
        raise GraphError("cannot sample a batch from an empty edge set")
    if B < 1:
        raise ConfigError("batch size must be >= 1")
    if B >= n:
        return np.arange(n, dtype=np.int64)
    return rng.choice(n, size=B, replace=False)


def stochastic_objective_Jt(state: SgdState, batch, graph: SparseGraph) -> float:
    """``sum_{(i,j) in batch} w_ij ||(u_i - u_j)^T R^-1||^2`` using the cached ``R``."""
    b = np.asarray(batch, dtype=np.int64).ravel()
    if b.size == 0:
        return 0.0
    i, j, w = graph.rows[b], graph.cols[b], graph.weights[b]
    D = state.U[i] - state.U[j]
    Y = sla.solve_triangular(state.R, D.T, trans="T", lower=False)
    return float(np.sum(w * np.sum(Y * Y, axis=0)))


def stochastic_gradient(
    U: np.ndarray,
    R: np.ndarray,
    batch,
    graph: SparseGraph,
    low_rank: LowRankTerm | None = None,
    P: Sequence[np.ndarray] = (),
) -> tuple[np.ndarray, np.ndarray]:
    """Detached-``R`` gradient of the batch objective, restricted to touched rows.

    Returns ``(vertices, rows)``; every other row of the gradient is zero.

    With a low-rank term, each touched row ``n`` also gets
    ``-2 alpha sum_s u^s_n P^s M^-1`` (``P^s = U^s^T U``), multiplied by
    ``(N / n_touched) * (B / |I|)`` so that its expectation keeps the same
    proportion to the edge part as in the full objective.
    """
    vertices, LU = apply_partial_laplacian(graph, batch, U)
    G = 2.0 * LU
    if low_rank is not None and low_rank.alpha != 0 and vertices.size:
        n_batch = np.asarray(batch).size
        scale = (U.shape[0] / vertices.size) * (n_batch / graph.n_edges)
        for B, Ps in zip(low_rank.bases, P):
            G -= (2.0 * low_rank.alpha * scale) * (B[vertices] @ Ps)
    if vertices.size:
        G = sla.cho_solve((R, False), G.T).T
    return vertices, G


def graph_laplacian_dot(graph: SparseGraph, U: np.ndarray) -> np.ndarray:
    """``L U`` for the unnormalized Laplacian of ``graph``."""
    return graph.degrees[:, None] * U - graph.adjacency @ U


def detached_full_gradient(U: np.ndarray, R: np.ndarray, graph: SparseGraph) -> np.ndarray:
    """``2 L U M^-1`` with ``M = R^T R`` held fixed (dense N x K result)."""
    G = 2.0 * graph_laplacian_dot(graph, U)
    return sla.cho_solve((R, False), G.T).T


def gram_update(M: np.ndarray, changed_rows) -> np.ndarray:
    """Add ``u_new u_new^T - u_old u_old^T`` for every changed row, then symmetrize.

    ``changed_rows`` is an iterable of ``(old_row, new_row)`` pairs or a tuple
    of two stacked ``(m, K)`` arrays; each row must appear once.
    """
    if isinstance(changed_rows, tuple) and len(changed_rows) == 2 and np.ndim(changed_rows[0]) == 2:
        old, new = changed_rows
    else:
        pairs = list(changed_rows)
        if not pairs:
            return M.copy()
        old = np.array([p[0] for p in pairs], dtype=np.float64)
        new = np.array([p[1] for p in pairs], dtype=np.float64)
    old = np.atleast_2d(old)
    new = np.atleast_2d(new)
    Mn = M + new.T @ new - old.T @ old
    return 0.5 * (Mn + Mn.T)


def _refresh(state: SgdState, low_rank: LowRankTerm | None) -> None:
    state.M = state.U.T @ state.U
    if low_rank is not None:
        state.P = low_rank.projections(state.U)


def _refactor(state: SgdState, low_rank: LowRankTerm | None) -> None:
    """Recompute ``R`` from ``M``; on failure refresh ``M`` and retry with growing jitter."""
    try:
        state.R = cholesky_upper(state.M)
        return
    except RankDeficiencyError:
        pass
    K = state.M.shape[0]
    _refresh(state, low_rank)
    for attempt in range(_MAX_PD_FAILURES):
        eps = 1e-10 * max(np.trace(state.M), np.finfo(float).tiny) / K * 10.0**attempt
        log.warning("Gram matrix lost definiteness at step %d; jitter %.3g", state.t, eps)
        state.n_jitter += 1
        try:
            state.R = cholesky_upper(state.M + eps * np.eye(K))
            return
        except RankDeficiencyError:
            continue
    raise RankDeficiencyError(f"iterate became rank deficient at step {state.t}")


def _needs_rewhiten(state: SgdState) -> bool:
    d = np.diag(state.R)
    if d.max() > _COND_LIMIT * d.min():
        return True
    return not (1.0 / _SCALE_LIMIT < d.max() and d.min() < _SCALE_LIMIT)


def rewhiten(state: SgdState, low_rank: LowRankTerm | None = None) -> None:
    """Replace ``U`` by ``U R^-1`` (same objective, ``M = I``); touches every row."""
    state.U = orthogonalize(state.U, state.R)
    _refresh(state, low_rank)
    state.R = cholesky_upper(state.M)
    state.n_rewhiten += 1


def sgd_step(
    state: SgdState,
    batch,
    graph: SparseGraph,
    low_rank: LowRankTerm | None = None,
) -> SgdState:
    """One update ``U <- U - gamma_t * step`` on the rows touched by ``batch``.

    ``step`` is the detached batch gradient, optionally multiplied by ``M``
    and by ``|I| / B`` (see :class:`SgdConfig`). Modifies and returns ``state``.
    """
    gamma = state.step_size()
    vertices, G = stochastic_gradient(state.U, state.R, batch, graph, low_rank, state.P)
    if vertices.size and gamma != 0:
        if state.precondition:
            G = G @ state.M
        if state.unbiased:
            gamma = gamma * graph.n_edges / np.asarray(batch).size
        old = state.U[vertices]
        new = old - gamma * G
        state.U[vertices] = new
        state.M = gram_update(state.M, (old, new))
        if low_rank is not None:
            delta = new - old
            state.P = [Ps + B[vertices].T @ delta for B, Ps in zip(low_rank.bases, state.P)]
    state.t += 1
    if state.refresh_period and state.t % state.refresh_period == 0:
        _refresh(state, low_rank)
    _refactor(state, low_rank)
    if _needs_rewhiten(state):
        rewhiten(state, low_rank)
    return state


class _SgdOperator:
    """Graph Laplacian plus the optional low-rank term."""

    def __init__(self, graph, low_rank=None):
        self.graph = graph
        self.low_rank = low_rank
        self.n_vertices = graph.n_vertices

    def dot(self, X):
        Y = graph_laplacian_dot(self.graph, X)
        if self.low_rank is not None:
            Y += self.low_rank.dot(X)
        return Y


def embed_sgd_cholesky(
    graph: SparseGraph,
    K: int,
    config: SgdConfig | None = None,
    low_rank: LowRankTerm | None = None,
    U0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolverReport]:
    """Spectral embedding by mini-batch SGD on the Cholesky-reformulated objective.

    Parameters
    ----------
    graph : SparseGraph
        Edges that are sampled; its Laplacian is the sparse part of the problem.
    K : int
        Embedding dimension.
    config : SgdConfig, optional
    low_rank : LowRankTerm, optional
        Extra ``-alpha sum_s U^s U^s^T`` term (multilayer aggregation).
    U0 : ndarray, optional
        Starting point; random when omitted.

    Returns
    -------
    Q : ndarray, shape (N, K)
        Orthonormalized embedding ``U R^-1``.
    report : SolverReport
    """
    config = config or SgdConfig()
    N = graph.n_vertices
    start = time.perf_counter()
    state = init_state(N, K, config, low_rank, U0)
    edges = edge_index_set(graph)
    period = config.trace_period
    op = _SgdOperator(graph, low_rank)
    trace = [(0, objective_J(state.U, op))]
    iterations = config.iterations if len(edges) else 0
    for _ in range(iterations):
        batch = sample_minibatch(edges, state.batch_size, state.rng)
        sgd_step(state, batch, graph, low_rank)
        if state.t % period == 0 or state.t == iterations:
            value = objective_J(state.U, op)
            if not np.isfinite(value):
                raise ConvergenceError(f"objective became non-finite at step {state.t}")
            trace.append((state.t, value))
    drift = state.gram_drift()
    Q = orthogonalize(state.U)
    objective = float(np.sum(Q * op.dot(Q)))
    seconds = time.perf_counter() - start
    report = SolverReport(
        solver="sgd_cholesky",
        objective=objective,
        iterations=iterations,
        seconds=seconds,
        trace=trace,
        extra={
            "gram_drift": drift,
            "gamma": config.gamma,
            "batch_size": config.batch_size,
            "rewhitenings": state.n_rewhiten,
        },
    )
    return Q, report
