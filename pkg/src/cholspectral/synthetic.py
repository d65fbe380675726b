"""Synthetic benchmark: Gaussian-mixture point clouds and their k-NN graph layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, GraphError
from .graph_core import SparseGraph

__all__ = ["PointCloud", "gmm_means", "gmm_sample", "knn_graph", "multilayer_synthetic"]


@dataclass
class PointCloud:
    points: np.ndarray
    truth: np.ndarray
    means: np.ndarray
    sigma: float

    @property
    def n_points(self) -> int:
        return self.points.shape[0]


def gmm_means(K: int, d: int = 2, mean_scale: float = 10.0, seed: int = 0) -> np.ndarray:
    """Component means drawn uniformly from ``[-mean_scale, mean_scale]^d``."""
    rng = np.random.default_rng([seed, 0])
    return rng.uniform(-mean_scale, mean_scale, size=(K, d))


def gmm_sample(
    n_per_cluster: int,
    K: int,
    d: int = 2,
    mean_scale: float = 10.0,
    sigma: float = 1.0,
    seed: int = 0,
    means: np.ndarray | None = None,
    noise_seed: int | None = None,
) -> PointCloud:
    """Sample ``n_per_cluster`` isotropic Gaussian points around each of ``K`` means.

    Points are grouped by component; ``truth[n]`` is the component of point
    ``n``. ``noise_seed`` (default ``seed``) only affects the noise, so two
    clouds sharing ``seed`` but not ``noise_seed`` share their means.
    """
    if n_per_cluster < 1 or K < 1 or d < 1:
        raise ConfigError("n_per_cluster, K and d must all be >= 1")
    if sigma < 0:
        raise ConfigError("sigma must be non-negative")
    if means is None:
        means = gmm_means(K, d, mean_scale, seed)
    means = np.asarray(means, dtype=np.float64)
    rng = np.random.default_rng([seed if noise_seed is None else noise_seed, 1])
    truth = np.repeat(np.arange(K), n_per_cluster)
    noise = rng.standard_normal((K * n_per_cluster, means.shape[1]))
    points = means[truth] + sigma * noise
    return PointCloud(points, truth, means, float(sigma))


def _knn_indices(X: np.ndarray, k: int, chunk: int = 1024) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbors (self excluded), ties broken by lower index."""
    N = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    idx = np.empty((N, k), dtype=np.int64)
    dist = np.empty((N, k))
    for lo in range(0, N, chunk):
        hi = min(lo + chunk, N)
        D = sq[lo:hi, None] - 2.0 * X[lo:hi] @ X.T + sq[None, :]
        np.maximum(D, 0.0, out=D)
        D[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        # Candidates within the k-th smallest distance, then a stable sort so ties go to lower ids.
        kth = np.partition(D, k - 1, axis=1)[:, k - 1 : k]
        for r in range(hi - lo):
            cand = np.flatnonzero(D[r] <= kth[r])
            order = np.argsort(D[r, cand], kind="stable")[:k]
            idx[lo + r] = cand[order]
            dist[lo + r] = D[r, cand[order]]
    return idx, np.sqrt(dist)


def knn_graph(points: np.ndarray, k: int = 5, weighting: str = "binary") -> SparseGraph:
    """Symmetrized k-nearest-neighbor graph.

    An edge ``{i, j}`` exists when either point lists the other among its
    ``k`` nearest neighbors (brute-force Euclidean search).

    Parameters
    ----------
    points : ndarray, shape (N, d)
    k : int
    weighting : {"binary", "gaussian"}
        ``"gaussian"`` uses ``exp(-||x_i - x_j||^2 / (2 s^2))`` with ``s`` the
        mean distance to the k-th neighbor.
    """
    X = np.asarray(points, dtype=np.float64)
    N = X.shape[0]
    if k < 1 or k >= N:
        raise GraphError(f"k={k} must satisfy 1 <= k < N={N}")
    if weighting not in ("binary", "gaussian"):
        raise ConfigError(f"unknown weighting {weighting!r}")
    idx, dist = _knn_indices(X, k)
    src = np.repeat(np.arange(N), k)
    dst = idx.ravel()
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    key = np.unique(lo * N + hi)
    rows, cols = key // N, key % N
    if weighting == "binary":
        w = np.ones(rows.shape[0])
    else:
        s = float(np.mean(dist[:, -1]))
        d2 = np.sum((X[rows] - X[cols]) ** 2, axis=1)
        w = np.exp(-d2 / (2.0 * s * s)) if s > 0 else np.ones(rows.shape[0])
        # Coincident points under a zero bandwidth still need a positive weight.
        w = np.maximum(w, np.finfo(float).tiny)
    return SparseGraph(N, rows, cols, w)


def multilayer_synthetic(
    S: int,
    n_per_cluster: int,
    K: int = 5,
    seed: int = 0,
    d: int = 2,
    mean_scale: float = 10.0,
    sigma: float = 1.0,
    k: int = 5,
    weighting: str = "binary",
) -> tuple[list[SparseGraph], np.ndarray]:
    """``S`` k-NN layers over the same vertices, one independent point cloud per layer.

    All clouds share the component means; vertex ``n`` belongs to the same
    component in every layer. Returns ``(graphs, truth)``.
    """
    if S < 1:
        raise ConfigError("S must be >= 1")
    means = gmm_means(K, d, mean_scale, seed)
    graphs = []
    truth = None
    for s in range(S):
        cloud = gmm_sample(n_per_cluster, K, d, mean_scale, sigma, seed, means=means, noise_seed=seed * 1000 + s)
        graphs.append(knn_graph(cloud.points, k, weighting))
        truth = cloud.truth
    return graphs, truth
