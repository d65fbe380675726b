import numpy as np
import pytest
from hypothesis import given, strategies as st

from cholspectral import (
    GraphError,
    ParseError,
    apply_partial_laplacian,
    build_graph,
    edge_index_set,
    laplacian,
    read_edge_list,
    write_edge_list,
)

from conftest import dense_laplacian, random_graph


def path2():
    return build_graph([(0, 1, 1.0)], n_vertices=2)


def triangle():
    return build_graph([(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])


class TestBuildGraph:
    def test_single_edge(self):
        g = path2()
        assert g.n_edges == 1
        np.testing.assert_array_equal(g.degrees, [1.0, 1.0])

    def test_mirrored_pair_is_stored_once(self):
        g = build_graph([(0, 1, 2.0), (1, 0, 2.0)])
        assert g.edges() == [(0, 1, 2.0)]

    def test_self_loop_dropped(self):
        g = build_graph([(0, 0, 3.0), (0, 1, 1.0)])
        assert g.edges() == [(0, 1, 1.0)]
        assert g.degrees[0] == 1.0

    def test_zero_weight_dropped(self):
        g = build_graph([(0, 1, 0.0), (1, 2, 1.0)])
        assert g.edges() == [(1, 2, 1.0)]
        assert g.n_vertices == 3

    def test_same_orientation_duplicates_summed(self):
        g = build_graph([(0, 1, 1.0), (0, 1, 2.5)])
        assert g.edges() == [(0, 1, 3.5)]

    def test_strict_mode_rejects_inconsistent_duplicates(self):
        with pytest.raises(GraphError):
            build_graph([(0, 1, 1.0), (0, 1, 2.0)], duplicates="strict")
        assert build_graph([(0, 1, 1.0), (0, 1, 1.0)], duplicates="strict").n_edges == 1

    def test_asymmetric_mirror_rejected(self):
        with pytest.raises(GraphError):
            build_graph([(0, 1, 1.0), (1, 0, 2.0)])

    @pytest.mark.parametrize("triples", [[(0, 5, 1.0)], [(-1, 0, 1.0)]])
    def test_index_out_of_range(self, triples):
        with pytest.raises(GraphError):
            build_graph(triples, n_vertices=3)

    def test_negative_weight(self):
        with pytest.raises(GraphError):
            build_graph([(0, 1, -1.0)])

    def test_weights_are_float64_and_adjacency_symmetric(self):
        g = random_graph(20, seed=3)
        assert g.weights.dtype == np.float64
        A = g.toarray()
        np.testing.assert_array_equal(A, A.T)
        assert np.all(np.diag(A) == 0)
        assert np.all(g.rows < g.cols)

    def test_neighbors(self):
        g = triangle()
        nbrs, w = g.neighbors(0)
        assert sorted(nbrs.tolist()) == [1, 2]
        assert g.weight(2, 1) == 1.0


class TestLaplacian:
    def test_path_unnormalized(self):
        np.testing.assert_array_equal(laplacian(path2()).toarray(), [[1, -1], [-1, 1]])

    def test_path_sym(self):
        np.testing.assert_allclose(laplacian(path2(), "sym").toarray(), [[1, -1], [-1, 1]])

    def test_triangle_kills_ones(self):
        np.testing.assert_array_equal(laplacian(triangle()).dot(np.ones(3)), np.zeros(3))

    def test_sym_isolated_vertex(self):
        g = build_graph([(0, 1, 1.0)], n_vertices=3)
        with pytest.raises(GraphError):
            laplacian(g, "sym")

    def test_sym_matches_dense_formula(self):
        g = random_graph(15, seed=1, connected=True)
        L = dense_laplacian(g)
        d = 1 / np.sqrt(g.degrees)
        np.testing.assert_allclose(laplacian(g, "sym").toarray(), d[:, None] * L * d[None, :], atol=1e-14)

    def test_unknown_kind(self):
        with pytest.raises(Exception):
            laplacian(path2(), "random_walk")

    @given(st.integers(2, 40), st.integers(0, 10_000))
    def test_rows_sum_to_zero(self, n, seed):
        g = random_graph(n, seed=seed)
        assert np.max(np.abs(laplacian(g).dot(np.ones(n)))) <= 1e-12

    @given(st.integers(2, 50), st.integers(0, 10_000), st.integers(1, 4))
    def test_edge_sum_equals_trace(self, n, seed, K):
        g = random_graph(n, seed=seed)
        U = np.random.default_rng(seed).standard_normal((n, K))
        edge_sum = sum(w * np.sum((U[i] - U[j]) ** 2) for i, j, w in g.edges())
        oracle = np.trace(U.T @ dense_laplacian(g) @ U)
        assert edge_sum == pytest.approx(oracle, rel=1e-10, abs=1e-12)
        assert laplacian(g).quadratic_trace(U) == pytest.approx(oracle, rel=1e-10, abs=1e-12)

    def test_psd_on_random_vectors(self):
        g = random_graph(100, p=0.05, seed=2)
        X = np.random.default_rng(0).standard_normal((100, 1000))
        q = np.sum(X * laplacian(g).dot(X), axis=0)
        assert np.all(q >= -1e-12)

    def test_norm_bound_dominates_spectrum(self):
        g = random_graph(30, seed=4)
        L = laplacian(g)
        assert np.linalg.eigvalsh(L.toarray())[-1] <= L.norm_bound() + 1e-12


class TestEdgeIndexSet:
    def test_path(self):
        assert edge_index_set(path2()).as_set() == {(0, 1)}

    def test_triangle(self):
        assert edge_index_set(triangle()).as_set() == {(0, 1), (0, 2), (1, 2)}

    def test_empty(self):
        view = edge_index_set(build_graph([], n_vertices=4))
        assert len(view) == 0 and list(view) == []

    def test_random_access(self):
        g = random_graph(20, seed=5)
        view = edge_index_set(g)
        assert len(view) == g.n_edges
        assert [view[k] for k in range(len(view))] == list(view)


class TestPartialLaplacian:
    def test_full_batch_matches_dense(self):
        g = random_graph(20, seed=6)
        U = np.random.default_rng(1).standard_normal((20, 3))
        rows, out = apply_partial_laplacian(g, np.arange(g.n_edges), U)
        full = dense_laplacian(g) @ U
        touched = np.flatnonzero(g.degrees > 0)
        np.testing.assert_array_equal(rows, touched)
        np.testing.assert_allclose(out, full[touched], atol=1e-12)

    def test_empty_batch(self):
        rows, out = apply_partial_laplacian(triangle(), [], np.ones((3, 2)))
        assert rows.size == 0 and out.shape == (0, 2)

    def test_single_edge_by_hand(self):
        g = build_graph([(0, 1, 1.0), (1, 2, 1.0)])
        U = np.array([[1.0, 2.0], [4.0, -1.0], [0.0, 0.0]])
        rows, out = apply_partial_laplacian(g, [0], U)
        np.testing.assert_array_equal(rows, [0, 1])
        np.testing.assert_allclose(out, [U[0] - U[1], U[1] - U[0]])

    def test_index_outside_edge_set(self):
        with pytest.raises(GraphError):
            apply_partial_laplacian(triangle(), [3], np.ones((3, 1)))

    @given(st.integers(3, 30), st.integers(0, 10_000), st.integers(1, 5))
    def test_partition_property(self, n, seed, parts):
        g = random_graph(n, seed=seed)
        rng = np.random.default_rng(seed)
        U = rng.standard_normal((n, 2))
        labels = rng.integers(parts, size=g.n_edges)
        total = np.zeros_like(U)
        for p in range(parts):
            rows, out = apply_partial_laplacian(g, np.flatnonzero(labels == p), U)
            total[rows] += out
        rows, out = apply_partial_laplacian(g, np.arange(g.n_edges), U)
        full = np.zeros_like(U)
        full[rows] = out
        np.testing.assert_allclose(total, full, atol=1e-12)


class TestEdgeListIO:
    def test_roundtrip(self, tmp_path):
        g = random_graph(12, seed=7)
        path = tmp_path / "g.tsv"
        write_edge_list(g, path)
        h = read_edge_list(path)
        assert h.n_vertices == g.n_vertices
        assert h.edges() == g.edges()

    def test_header_sets_vertex_count(self, tmp_path):
        path = tmp_path / "g.tsv"
        path.write_text("# n_vertices=5\n# comment\n0\t1\t1.0\n")
        assert read_edge_list(path).n_vertices == 5

    def test_vertex_count_from_max_id(self, tmp_path):
        path = tmp_path / "g.tsv"
        path.write_text("0 3 2\n")
        g = read_edge_list(path)
        assert g.n_vertices == 4 and g.edges() == [(0, 3, 2.0)]

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("0\t1\t1.0\n1\tx\t2.0\n")
        with pytest.raises(ParseError, match=r"bad\.tsv:2:"):
            read_edge_list(path)
