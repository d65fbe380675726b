"""k-means on embedding rows and external clustering metrics (purity, NMI, Rand index)."""

from __future__ import annotations

import logging
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ParseError

__all__ = [
    "KMeansConfig",
    "KMeansResult",
    "kmeans",
    "contingency",
    "purity",
    "nmi",
    "rand_index",
    "evaluate",
    "read_labels",
    "write_labels",
]

log = logging.getLogger(__name__)


@dataclass
class KMeansConfig:
    max_iter: int = 300
    n_restarts: int = 10
    seed: int = 0
    tol: float = 1e-6


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    wcss: float
    history: list
    restart: int


def _kmeanspp(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    N = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(N)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(N, p=d2 / total)
        else:
            idx = rng.integers(N)
        centers[k] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[k]) ** 2, axis=1))
    return centers


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    D = np.sum(X * X, axis=1)[:, None] - 2.0 * X @ C.T + np.sum(C * C, axis=1)[None, :]
    return np.maximum(D, 0.0)


def _lloyd(X, centers, max_iter, tol):
    history = []
    K = centers.shape[0]
    labels = None
    prev = np.inf
    for _ in range(max_iter):
        D = _sq_dists(X, centers)
        labels = np.argmin(D, axis=1)
        point_cost = D[np.arange(X.shape[0]), labels]
        # Repair empty clusters with the points farthest from their centers.
        counts = np.bincount(labels, minlength=K)
        for k in np.flatnonzero(counts == 0):
            far = int(np.argmax(point_cost))
            labels[far] = k
            point_cost[far] = 0.0
        counts = np.bincount(labels, minlength=K)
        wcss = float(point_cost.sum())
        history.append(wcss)
        for k in range(K):
            if counts[k]:
                centers[k] = X[labels == k].mean(axis=0)
        if prev - wcss <= tol * max(wcss, np.finfo(float).tiny):
            break
        prev = wcss
    D = _sq_dists(X, centers)
    wcss = float(np.sum(D[np.arange(X.shape[0]), labels]))
    history.append(wcss)
    return labels, centers, wcss, history


def kmeans(X: np.ndarray, K: int, config: KMeansConfig | None = None, return_result: bool = False):
    """Lloyd's algorithm from k-means++ seeds, best of ``n_restarts`` by within-cluster sum of squares.

    Deterministic for a fixed ``config.seed``; ties between restarts go to the
    earliest one. Returns the label vector (or a :class:`KMeansResult`).
    """
    config = config or KMeansConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    N = X.shape[0]
    if K < 1 or K > N:
        raise ConfigError(f"K={K} must satisfy 1 <= K <= N={N}")
    if K > 1 and np.all(X == X[0]):
        warnings.warn("all rows are identical; returning an arbitrary split", RuntimeWarning, stacklevel=2)
        labels = np.arange(N) % K
        res = KMeansResult(labels, np.repeat(X[:1], K, axis=0), 0.0, [0.0], 0)
        return res if return_result else res.labels
    rng = np.random.default_rng(config.seed)
    best = None
    for r in range(max(1, config.n_restarts)):
        centers = _kmeanspp(X, K, rng)
        labels, centers, wcss, history = _lloyd(X, centers, config.max_iter, config.tol)
        if best is None or wcss < best.wcss:
            best = KMeansResult(labels, centers, wcss, history, r)
    return best if return_result else best.labels


def _check_pair(pred, truth):
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ConfigError(f"label length mismatch: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise ConfigError("empty labelings")
    return pred, truth


def contingency(pred, truth) -> np.ndarray:
    """Counts ``C[a, b]`` of points with predicted label ``a`` and true label ``b`` (labels compacted)."""
    pred, truth = _check_pair(pred, truth)
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    C = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(C, (p, t), 1)
    return C


def purity(pred, truth) -> float:
    C = contingency(pred, truth)
    return float(C.max(axis=1).sum() / C.sum())


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    """Mutual information over the geometric mean of the two entropies (natural log)."""
    C = contingency(pred, truth)
    n = C.sum()
    a = C.sum(axis=1)
    b = C.sum(axis=0)
    ha, hb = _entropy(a, n), _entropy(b, n)
    if ha == 0.0 or hb == 0.0:
        return 1.0 if ha == hb else 0.0
    nz = C > 0
    outer = np.outer(a, b)[nz]
    mi = float(np.sum(C[nz] / n * np.log(C[nz] * n / outer)))
    return float(min(max(mi / np.sqrt(ha * hb), 0.0), 1.0))


def _pairs(x):
    x = np.asarray(x, dtype=np.int64)
    return x * (x - 1) // 2


def rand_index(pred, truth) -> float:
    """Fraction of vertex pairs on which both labelings agree (unadjusted)."""
    C = contingency(pred, truth)
    n = int(C.sum())
    if n < 2:
        raise ConfigError("the Rand index needs at least two points")
    total = n * (n - 1) // 2
    same_both = int(_pairs(C).sum())
    same_pred = int(_pairs(C.sum(axis=1)).sum())
    same_true = int(_pairs(C.sum(axis=0)).sum())
    agree = total + 2 * same_both - same_pred - same_true
    return agree / total


def evaluate(pred, truth) -> dict:
    return {
        "purity": round(purity(pred, truth), 6),
        "nmi": round(nmi(pred, truth), 6),
        "rand_index": round(rand_index(pred, truth), 6),
    }


def write_labels(labels, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in np.asarray(labels).ravel():
            fh.write(f"{int(v)}\n")


def read_labels(path: str | os.PathLike) -> np.ndarray:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                out.append(int(s))
            except ValueError:
                raise ParseError(f"not an integer label: {s!r}", path, lineno) from None
    return np.asarray(out, dtype=np.int64)
