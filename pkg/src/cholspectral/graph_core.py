"""Sparse weighted graphs, Laplacian operators and the edge index set.

A :class:`SparseGraph` stores every undirected edge once as ``(i, j, w)``
with ``i < j`` (used for uniform edge sampling) together with a symmetric
CSR adjacency (used for operator application).
"""

from __future__ import annotations

import os
import re
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .exceptions import GraphError, ParseError

__all__ = [
    "SparseGraph",
    "LaplacianOperator",
    "EdgeIndexView",
    "build_graph",
    "laplacian",
    "edge_index_set",
    "apply_partial_laplacian",
    "read_edge_list",
    "write_edge_list",
]

KINDS = ("unnormalized", "sym")


class SparseGraph:
    """Immutable undirected graph with strictly positive edge weights.

    Use :func:`build_graph` rather than calling the constructor with
    unchecked arrays.

    Attributes
    ----------
    n_vertices : int
    rows, cols : ndarray of int64, shape (n_edges,)
        Endpoints of each stored edge, ``rows < cols``, sorted lexicographically.
    weights : ndarray of float64, shape (n_edges,)
    adjacency : scipy.sparse.csr_matrix
        Symmetric weighted adjacency ``W``.
    degrees : ndarray of float64, shape (n_vertices,)
    """

    def __init__(self, n_vertices, rows, cols, weights):
        self.n_vertices = int(n_vertices)
        self.rows = np.ascontiguousarray(rows, dtype=np.int64)
        self.cols = np.ascontiguousarray(cols, dtype=np.int64)
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        n = self.n_vertices
        sym_r = np.concatenate([self.rows, self.cols])
        sym_c = np.concatenate([self.cols, self.rows])
        sym_w = np.concatenate([self.weights, self.weights])
        adj = sp.csr_matrix((sym_w, (sym_r, sym_c)), shape=(n, n))
        adj.sort_indices()
        self.adjacency = adj
        self.degrees = np.asarray(adj.sum(axis=1)).ravel()
        for arr in (self.rows, self.cols, self.weights, self.degrees):
            arr.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return self.weights.shape[0]

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(neighbor_ids, weights)`` of vertex ``i``."""
        a = self.adjacency
        lo, hi = a.indptr[i], a.indptr[i + 1]
        return a.indices[lo:hi], a.data[lo:hi]

    def weight(self, i: int, j: int) -> float:
        return float(self.adjacency[i, j])

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.rows, self.cols, self.weights)]

    def toarray(self) -> np.ndarray:
        return self.adjacency.toarray()

    def n_components(self) -> int:
        """Number of connected components (isolated vertices count as one each)."""
        return int(csgraph.connected_components(self.adjacency, directed=False)[0])

    def __repr__(self):
        return f"SparseGraph(n_vertices={self.n_vertices}, n_edges={self.n_edges})"


def build_graph(
    triples: Iterable[Sequence[float]] | np.ndarray,
    n_vertices: int | None = None,
    duplicates: str = "sum",
) -> SparseGraph:
    """Build a :class:`SparseGraph` from ``(i, j, w)`` triples.

    Self-loops and zero weights are dropped. A pair may be given in either
    orientation or both; when both orientations are present they must carry
    the same weight (a symmetric restatement of one edge). Repeated triples
    with the same orientation are summed (``duplicates="sum"``) or must agree
    exactly (``duplicates="strict"``).

    Parameters
    ----------
    triples : iterable of (i, j, w) or array of shape (m, 3)
    n_vertices : int, optional
        Defaults to ``1 + max id``.
    duplicates : {"sum", "strict"}

    Raises
    ------
    GraphError
        Out-of-range ids, negative or non-finite weights, inconsistent
        duplicates, or asymmetric mirrored weights.
    """
    if duplicates not in ("sum", "strict"):
        raise GraphError(f"unknown duplicates mode {duplicates!r}")
    arr = np.asarray(list(triples) if not isinstance(triples, np.ndarray) else triples, dtype=np.float64)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise GraphError("triples must have shape (m, 3)")
    i = arr[:, 0]
    j = arr[:, 1]
    w = arr[:, 2]
    if np.any(i != np.round(i)) or np.any(j != np.round(j)):
        raise GraphError("vertex ids must be integers")
    i = i.astype(np.int64)
    j = j.astype(np.int64)
    if n_vertices is None:
        n_vertices = int(max(i.max(initial=-1), j.max(initial=-1)) + 1)
    n_vertices = int(n_vertices)
    if n_vertices < 0:
        raise GraphError("n_vertices must be non-negative")
    bad = (i < 0) | (j < 0) | (i >= n_vertices) | (j >= n_vertices)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise GraphError(f"vertex id out of range [0, {n_vertices}): ({i[k]}, {j[k]})")
    if not np.all(np.isfinite(w)):
        raise GraphError("non-finite edge weight")
    if np.any(w < 0):
        k = int(np.flatnonzero(w < 0)[0])
        raise GraphError(f"negative weight {w[k]} on ({i[k]}, {j[k]})")

    keep = (i != j) & (w > 0)
    i, j, w = i[keep], j[keep], w[keep]

    # Collapse same-orientation duplicates first, keyed on the directed pair.
    key = i * n_vertices + j
    order = np.argsort(key, kind="stable")
    key, i, j, w = key[order], i[order], j[order], w[order]
    uniq, start = np.unique(key, return_index=True)
    if duplicates == "sum":
        wd = np.add.reduceat(w, start) if w.size else w
    else:
        wd = w[start]
        first = np.repeat(wd, np.diff(np.append(start, w.size)))
        if np.any(w != first):
            k = int(np.flatnonzero(w != first)[0])
            raise GraphError(f"inconsistent duplicate weights for ({i[k]}, {j[k]})")
    di, dj = i[start], j[start]

    lo = np.minimum(di, dj)
    hi = np.maximum(di, dj)
    ukey = lo * n_vertices + hi
    order = np.argsort(ukey, kind="stable")
    ukey, lo, hi, wd = ukey[order], lo[order], hi[order], wd[order]
    uniq, start, counts = np.unique(ukey, return_index=True, return_counts=True)
    wu = wd[start]
    both = np.flatnonzero(counts == 2)
    if both.size:
        other = wd[start[both] + 1]
        mismatch = other != wu[both]
        if np.any(mismatch):
            k = start[both[np.flatnonzero(mismatch)[0]]]
            raise GraphError(f"asymmetric weights for pair ({lo[k]}, {hi[k]})")
    return SparseGraph(n_vertices, lo[start], hi[start], wu)


class LaplacianOperator:
    """Sparse Laplacian ``L = D - W`` or ``L_sym = D^-1/2 (D - W) D^-1/2``.

    Application costs O(|E| + N) per column; nothing dense is built unless
    :meth:`toarray` is called.
    """

    def __init__(self, graph: SparseGraph, kind: str = "unnormalized"):
        if kind not in KINDS:
            raise GraphError(f"unknown Laplacian kind {kind!r}; expected one of {KINDS}")
        self.graph = graph
        self.kind = kind
        self.degrees = graph.degrees
        n = graph.n_vertices
        lap = sp.diags(graph.degrees, format="csr") - graph.adjacency
        if kind == "sym":
            if np.any(graph.degrees <= 0):
                iso = int(np.flatnonzero(graph.degrees <= 0)[0])
                raise GraphError(f"isolated vertex {iso}: sym-normalized Laplacian undefined")
            s = sp.diags(1.0 / np.sqrt(graph.degrees))
            lap = s @ lap @ s
        self.matrix = sp.csr_matrix(lap, shape=(n, n))
        self.matrix.sort_indices()

    @property
    def n_vertices(self) -> int:
        return self.graph.n_vertices

    @property
    def shape(self):
        return (self.n_vertices, self.n_vertices)

    def dot(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    __matmul__ = dot

    def quadratic_trace(self, U: np.ndarray) -> float:
        """``Tr(U^T L U)``."""
        return float(np.sum(U * self.dot(U)))

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral radius (max absolute row sum)."""
        if self.n_vertices == 0:
            return 0.0
        return float(np.max(np.asarray(abs(self.matrix).sum(axis=1)).ravel()))


def laplacian(graph: SparseGraph, kind: str = "unnormalized") -> LaplacianOperator:
    """Return the Laplacian operator of ``graph`` (``kind`` is ``"unnormalized"`` or ``"sym"``)."""
    return LaplacianOperator(graph, kind)


class EdgeIndexView:
    """Random-access view of the index set ``{(i, j) : w_ij != 0, j > i}``.

    Position ``k`` refers to the k-th stored edge of the graph.
    """

    def __init__(self, graph: SparseGraph):
        self.graph = graph
        self.rows = graph.rows
        self.cols = graph.cols
        self.weights = graph.weights

    def __len__(self):
        return self.rows.shape[0]

    def __getitem__(self, k):
        if np.ndim(k) == 0:
            return int(self.rows[k]), int(self.cols[k])
        return self.rows[k], self.cols[k]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def as_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in zip(self.rows, self.cols)}


def edge_index_set(graph: SparseGraph) -> EdgeIndexView:
    return EdgeIndexView(graph)


def _check_batch(batch, n_edges: int) -> np.ndarray:
    b = np.asarray(batch, dtype=np.int64).ravel()
    if b.size and (b.min() < 0 or b.max() >= n_edges):
        raise GraphError(f"edge index outside the index set (size {n_edges})")
    return b


def apply_partial_laplacian(
    graph: SparseGraph, batch, U: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Apply the partial Laplacian built from a batch of edges to ``U``.

    Parameters
    ----------
    graph : SparseGraph
    batch : array-like of int
        Positions in the edge index set.
    U : ndarray, shape (N, K)

    Returns
    -------
    vertices : ndarray of int64
        Sorted ids of the vertices touched by the batch.
    values : ndarray, shape (len(vertices), K)
        Row ``n`` of ``L_batch @ U`` for each touched vertex; every other row
        of that product is zero.
    """
    b = _check_batch(batch, graph.n_edges)
    K = U.shape[1]
    if b.size == 0:
        return np.empty(0, dtype=np.int64), np.empty((0, K))
    i = graph.rows[b]
    j = graph.cols[b]
    diff = graph.weights[b, None] * (U[i] - U[j])
    ends = np.concatenate([i, j])
    vertices, inv = np.unique(ends, return_inverse=True)
    contrib = np.concatenate([diff, -diff])
    values = np.empty((vertices.size, K))
    for k in range(K):
        values[:, k] = np.bincount(inv, weights=contrib[:, k], minlength=vertices.size)
    return vertices, values


_HEADER = re.compile(r"#\s*n_vertices\s*=\s*(\d+)\s*$")


def read_edge_list(path: str | os.PathLike, duplicates: str = "sum") -> SparseGraph:
    """Read a ``i<TAB>j<TAB>w`` edge list.

    Lines starting with ``#`` are comments; ``# n_vertices=N`` fixes the
    vertex count, otherwise it is ``1 + max id``.
    """
    n_vertices = None
    triples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                m = _HEADER.match(s)
                if m:
                    n_vertices = int(m.group(1))
                continue
            parts = s.split("\t") if "\t" in s else s.split()
            if len(parts) != 3:
                raise ParseError(f"expected 3 fields, got {len(parts)}", path, lineno)
            try:
                a, b = int(parts[0]), int(parts[1])
                w = float(parts[2])
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
            triples.append((a, b, w))
    try:
        return build_graph(triples, n_vertices=n_vertices, duplicates=duplicates)
    except GraphError as exc:
        raise ParseError(str(exc), path) from None


def write_edge_list(graph: SparseGraph, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n_vertices={graph.n_vertices}\n")
        for i, j, w in zip(graph.rows, graph.cols, graph.weights):
            fh.write(f"{int(i)}\t{int(j)}\t{float(w)!r}\n")
