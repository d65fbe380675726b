"""Merging several graph layers into one spectral embedding problem.

Each layer contributes its Laplacian ``L^s`` and its own embedding ``U^s``;
the merged operator is ``sum_s (L^s - alpha U^s U^s^T)``, kept as a sparse
Laplacian plus a rank-``S K`` correction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, GraphError
from .graph_core import LaplacianOperator, SparseGraph, build_graph, laplacian
from .report import SolverReport
from .sgd import LowRankTerm, SgdConfig, embed_sgd_cholesky
from .solvers import FbConfig, embed_eigen, embed_fb_qr

__all__ = [
    "LayerBundle",
    "AggregatedOperator",
    "make_bundle",
    "union_graph",
    "grassmann_proj_distance_sq",
    "multilayer_distance",
    "aggregate",
    "solve_multilayer",
]

_ORTHO_TOL = 1e-6


def _check_semi_orthogonal(U: np.ndarray, tol: float, name: str = "U") -> None:
    K = U.shape[1]
    dev = np.linalg.norm(U.T @ U - np.eye(K))
    if dev > tol:
        raise ConfigError(f"{name} is not semi-orthogonal (||U^T U - I||_F = {dev:.3g})")


def union_graph(graphs: Sequence[SparseGraph]) -> SparseGraph:
    """Graph whose Laplacian is the sum of the layer Laplacians (weights add up)."""
    if not graphs:
        raise GraphError("need at least one layer")
    n = graphs[0].n_vertices
    if any(g.n_vertices != n for g in graphs):
        raise GraphError("all layers must share the same vertex count")
    triples = np.concatenate(
        [np.column_stack([g.rows, g.cols, g.weights]) for g in graphs] or [np.empty((0, 3))]
    )
    return build_graph(triples, n_vertices=n, duplicates="sum")


@dataclass
class LayerBundle:
    """Layers over a shared vertex set, their semi-orthogonal embeddings, and ``alpha``."""

    graphs: list
    embeddings: list
    alpha: float = 0.5
    layers: list = field(init=False)

    def __post_init__(self):
        if len(self.graphs) == 0:
            raise ConfigError("a bundle needs at least one layer")
        if len(self.graphs) != len(self.embeddings):
            raise ConfigError("one embedding per layer is required")
        n = self.graphs[0].n_vertices
        if any(g.n_vertices != n for g in self.graphs):
            raise GraphError("all layers must share the same vertex count")
        K = self.embeddings[0].shape[1]
        for s, U in enumerate(self.embeddings):
            if U.shape != (n, K):
                raise ConfigError(f"embedding {s} has shape {U.shape}, expected {(n, K)}")
            _check_semi_orthogonal(U, 1e-8, f"embedding {s}")
        if self.alpha < 0:
            raise ConfigError("alpha must be non-negative")
        self.layers = [laplacian(g) for g in self.graphs]

    @property
    def n_vertices(self) -> int:
        return self.graphs[0].n_vertices

    @property
    def n_layers(self) -> int:
        return len(self.graphs)

    @property
    def K(self) -> int:
        return self.embeddings[0].shape[1]


def make_bundle(graphs: Sequence[SparseGraph], K: int, alpha: float = 0.5, method: str = "dense") -> LayerBundle:
    """Embed every layer with :func:`embed_eigen` and bundle the results."""
    embeddings = [embed_eigen(laplacian(g), K, method=method) for g in graphs]
    return LayerBundle(list(graphs), embeddings, alpha)


class AggregatedOperator:
    """``A x = S x - alpha * sum_s B_s (B_s^T x)`` with ``S`` sparse and ``B_s`` tall factors.

    Never builds the dense N x N matrix except in :meth:`toarray`.
    """

    def __init__(self, sparse, bases: Sequence[np.ndarray], alpha: float):
        self.sparse = sparse
        self.bases = [np.asarray(B, dtype=np.float64) for B in bases]
        self.alpha = float(alpha)
        n = sparse.n_vertices if hasattr(sparse, "n_vertices") else sparse.shape[0]
        self.n_vertices = int(n)
        if any(B.shape[0] != self.n_vertices for B in self.bases):
            raise GraphError("low-rank factors must have one row per vertex")

    @property
    def shape(self):
        return (self.n_vertices, self.n_vertices)

    def dot(self, X: np.ndarray) -> np.ndarray:
        Y = self.sparse.dot(X)
        if self.alpha:
            for B in self.bases:
                Y = Y - self.alpha * (B @ (B.T @ X))
        return Y

    __matmul__ = dot

    def toarray(self) -> np.ndarray:
        A = self.sparse.toarray()
        for B in self.bases:
            A -= self.alpha * (B @ B.T)
        return A

    def norm_bound(self) -> float:
        low = sum(float(np.linalg.norm(B, 2)) ** 2 for B in self.bases)
        return float(self.sparse.norm_bound()) + abs(self.alpha) * low

    def normalized(self) -> "AggregatedOperator":
        """``D^-1/2 A D^-1/2`` with ``D`` the degrees of the sparse part."""
        if not isinstance(self.sparse, LaplacianOperator) or self.sparse.kind != "unnormalized":
            raise ConfigError("normalization needs an unnormalized Laplacian as sparse part")
        sym = laplacian(self.sparse.graph, "sym")
        s = 1.0 / np.sqrt(self.sparse.degrees)
        return AggregatedOperator(sym, [s[:, None] * B for B in self.bases], self.alpha)

    def low_rank_term(self) -> LowRankTerm:
        return LowRankTerm(self.bases, self.alpha)


def grassmann_proj_distance_sq(U1: np.ndarray, U2: np.ndarray) -> float:
    """Squared projection distance ``K - ||U1^T U2||_F^2`` between two column spans."""
    if U1.shape != U2.shape:
        raise ConfigError(f"shape mismatch {U1.shape} vs {U2.shape}")
    _check_semi_orthogonal(U1, _ORTHO_TOL, "U1")
    _check_semi_orthogonal(U2, _ORTHO_TOL, "U2")
    K = U1.shape[1]
    C = U1.T @ U2
    return float(min(max(K - np.sum(C * C), 0.0), K))


def multilayer_distance(U: np.ndarray, bundle: LayerBundle) -> float:
    """Sum of squared projection distances from ``U`` to every layer embedding."""
    if U.shape != (bundle.n_vertices, bundle.K):
        raise ConfigError(f"U has shape {U.shape}, expected {(bundle.n_vertices, bundle.K)}")
    return float(sum(grassmann_proj_distance_sq(U, Us) for Us in bundle.embeddings))


def aggregate(bundle: LayerBundle) -> AggregatedOperator:
    """Sparse-plus-low-rank form of ``sum_s (L^s - alpha U^s U^s^T)``."""
    sparse = laplacian(union_graph(bundle.graphs))
    return AggregatedOperator(sparse, bundle.embeddings, bundle.alpha)


def solve_multilayer(
    bundle: LayerBundle,
    K: int,
    solver: str = "eigen",
    config=None,
    normalized: bool = False,
) -> tuple[np.ndarray, SolverReport]:
    """Embedding of the aggregated operator with the chosen solver.

    Parameters
    ----------
    bundle : LayerBundle
    K : int
    solver : {"eigen", "fb_qr", "sgd_cholesky"}
    config : SgdConfig or FbConfig, optional
        Solver settings; ignored by ``"eigen"``.
    normalized : bool
        Use ``D^-1/2 L_MLG D^-1/2`` (eigen solver only).
    """
    op = aggregate(bundle)
    if normalized:
        if solver != "eigen":
            raise ConfigError("the normalized aggregate is only supported by the eigen solver")
        op = op.normalized()
    if solver == "eigen":
        return embed_eigen(op, K, return_report=True)
    if solver == "fb_qr":
        cfg = config or FbConfig()
        return embed_fb_qr(op, K, cfg.steps, cfg.gamma, seed=cfg.seed, trace_period=cfg.trace_period)
    if solver == "sgd_cholesky":
        cfg = config or SgdConfig()
        low_rank = op.low_rank_term() if bundle.alpha else None
        return embed_sgd_cholesky(op.sparse.graph, K, cfg, low_rank)
    raise ConfigError(f"unknown solver {solver!r}")
