import numpy as np
import pytest

from npclust import use_backend
from npclust.evaluation import brute_force_penalized_cut, set_partitions
from npclust.graphcut import (
    SparseGraph,
    auto_shift,
    build_ncut_kernel,
    cut_objective,
    min_normalized_eigenvalue,
    ncut_cluster_cache,
    node_to_cluster_distance_sparse,
    normalized_adjacency,
    read_edge_list,
    run_penalized_ncut,
    write_edge_list,
)
from npclust.kernel import kernel_point_to_cluster_dist, weighted_kernel_objective

TRIANGLES = [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)]


def barbell():
    edges = [(i, j, 1) for i in range(4) for j in range(i + 1, 4)]
    edges += [(i + 4, j + 4, 1) for i, j, _ in edges]
    return SparseGraph.from_edges(edges + [(3, 4, 1)])


def random_graph(rng, n, p=0.35):
    while True:
        A = np.triu((rng.random((n, n)) < p) * rng.uniform(0.1, 2.0, (n, n)), 1)
        A = A + A.T
        if np.all(A.sum(1) > 0):
            return SparseGraph.from_dense(A)


class TestGraph:
    def test_degrees_and_symmetry(self):
        g = SparseGraph.from_edges([(0, 1, 2.0), (1, 2, 0.5)])
        assert g.degrees.tolist() == [2.0, 2.5, 0.5]
        assert np.array_equal(g.dense(), g.dense().T)
        assert g.n_edges == 2

    def test_duplicate_edges_sum(self):
        g = SparseGraph.from_edges([(0, 1, 1.0), (1, 0, 2.0)])
        assert g.dense()[0, 1] == 3.0

    @pytest.mark.parametrize(
        "edges, n, match",
        [
            ([(0, 0, 1.0), (0, 1, 1.0)], None, "self-loop"),
            ([(0, 1, -1.0)], None, "non-negative"),
            ([(0, 1, 1.0)], 3, "isolated"),
            ([(0, 5, 1.0)], 3, "out of range"),
        ],
    )
    def test_rejects(self, edges, n, match):
        with pytest.raises(ValueError, match=match):
            SparseGraph.from_edges(edges, n)

    def test_edge_list_round_trip(self, tmp_path):
        g = SparseGraph.from_edges([(0, 1, 0.1), (1, 2, 1 / 3), (0, 2, 7.0)])
        path = tmp_path / "g.edges"
        write_edge_list(g, path)
        h = read_edge_list(path)
        assert np.array_equal(g.dense(), h.dense())

    def test_edge_list_parsing(self, tmp_path):
        path = tmp_path / "g.edges"
        path.write_text("# header\n0 1 2.5\n\n1 2   # default weight\n")
        g = read_edge_list(path)
        assert g.dense()[0, 1] == 2.5 and g.dense()[1, 2] == 1.0
        path.write_text("0 1 x\n")
        with pytest.raises(ValueError, match=":1:"):
            read_edge_list(path)
        path.write_text("# nothing\n")
        with pytest.raises(ValueError, match="no edges"):
            read_edge_list(path)


class TestKernel:
    def test_single_edge(self):
        g = SparseGraph.from_edges([(0, 1, 1.0)])
        K, w = build_ncut_kernel(g, 1.5)
        assert np.allclose(K, [[1.5, 1.0], [1.0, 1.5]]) and w.tolist() == [1.0, 1.0]
        build_ncut_kernel(g, 1.0)
        with pytest.raises(ValueError, match="shift"):
            build_ncut_kernel(g, 0.5)
        assert auto_shift(g) == pytest.approx(1.0 + 1e-6)

    def test_disconnected_edges_block_diagonal(self):
        g = SparseGraph.from_edges([(0, 1, 1.0), (2, 3, 1.0)])
        K, _ = build_ncut_kernel(g, 1.0)
        assert np.all(K[:2, 2:] == 0) and np.all(K[2:, :2] == 0)

    def test_large_graph_spectrum_stays_sparse(self):
        g = random_graph(np.random.default_rng(9), 700, p=0.01)
        dense = np.linalg.eigvalsh(normalized_adjacency(g))[0]
        assert min_normalized_eigenvalue(g) == pytest.approx(dense, abs=1e-10)

    def test_triangle_spectrum(self):
        g = SparseGraph.from_edges(TRIANGLES[:3])
        K, _ = build_ncut_kernel(g, 1.0)
        assert np.allclose(K, np.eye(3) / 2 + (np.ones((3, 3)) - np.eye(3)) / 4)
        assert np.allclose(np.linalg.eigvalsh(K), [0.25, 0.25, 1.0])


class TestCut:
    def test_examples(self):
        g = SparseGraph.from_edges(TRIANGLES)
        assert cut_objective(g, [0, 0, 0, 1, 1, 1]) == 0.0
        assert cut_objective(g, np.zeros(6, int)) == 0.0
        assert cut_objective(SparseGraph.from_edges([(0, 1, 1.0)]), [0, 1]) == 2.0
        with pytest.raises(ValueError, match="empty"):
            cut_objective(g, [0, 0, 0, 2, 2, 2])

    def test_affine_identity_all_partitions(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = int(rng.integers(2, 8))
            g = random_graph(rng, n)
            shift = auto_shift(g) + rng.uniform(0, 1)
            K, w = build_ncut_kernel(g, shift)
            for z in set_partitions(n):
                k = z.max() + 1
                J = weighted_kernel_objective(K, w, z)
                assert abs(J - (shift * n - (shift + 1) * k + cut_objective(g, z))) <= 1e-8


class TestSparseDistance:
    def test_singleton_is_zero(self):
        g = random_graph(np.random.default_rng(1), 8)
        assert node_to_cluster_distance_sparse(g, 2.0, 3, [3]) == pytest.approx(0.0, abs=1e-12)

    def test_matches_dense(self):
        rng = np.random.default_rng(2)
        for n in (2, 10, 30, 50):
            g = random_graph(rng, n, p=0.15)
            shift = auto_shift(g)
            K, w = build_ncut_kernel(g, shift)
            z = rng.integers(0, max(1, n // 5), size=n)
            for c in np.unique(z):
                members = np.flatnonzero(z == c)
                cache = ncut_cluster_cache(g, members)
                for x in range(n):
                    sparse = node_to_cluster_distance_sparse(g, shift, x, members, cache)
                    assert abs(sparse - kernel_point_to_cluster_dist(K, w, x, members)) <= 1e-10


class TestRun:
    def test_triangles(self, backend):
        g = SparseGraph.from_edges(TRIANGLES)
        res = run_penalized_ncut(g, 0.5)
        assert res.penalized_cut == pytest.approx(brute_force_penalized_cut(g, 0.5)[0])
        assert res.k == 1 and res.penalized_cut == pytest.approx(0.5)

    def test_triangles_negative_penalty_from_components(self, backend):
        g = SparseGraph.from_edges(TRIANGLES)
        res = run_penalized_ncut(g, -0.5, initial=[0, 0, 0, 1, 1, 1])
        assert res.k == 2 and res.penalized_cut == pytest.approx(-1.0)
        assert res.penalized_cut == pytest.approx(brute_force_penalized_cut(g, -0.5)[0])

    def test_barbell(self, backend):
        g = barbell()
        res = run_penalized_ncut(g, 0.5)
        assert res.penalized_cut == pytest.approx(brute_force_penalized_cut(g, 0.5)[0])
        split = run_penalized_ncut(g, -0.5, initial=[0] * 4 + [1] * 4)
        assert split.assignments.tolist() == [0] * 4 + [1] * 4
        assert split.penalized_cut == pytest.approx(brute_force_penalized_cut(g, -0.5)[0])

    def test_huge_penalty(self):
        g = barbell()
        lam = 2 * g.degrees.sum()
        res = run_penalized_ncut(g, lam)
        assert res.k == 1 and res.penalized_cut == pytest.approx(lam)

    def test_sparse_equals_dense_and_monotone(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(4, 40))
            g = random_graph(rng, n, p=0.2)
            lp = float(rng.uniform(-0.9, 0.2))
            init = rng.integers(0, max(1, n // 3), size=n)
            runs = []
            for b in ("numba", "numpy"):
                with use_backend(b):
                    for m in ("sparse", "dense"):
                        runs.append(run_penalized_ncut(g, lp, method=m, initial=init))
            for r in runs[1:]:
                assert np.array_equal(r.assignments, runs[0].assignments)
                assert r.penalized_cut == pytest.approx(runs[0].penalized_cut, abs=1e-9)
            for r in runs:
                assert np.all(np.diff(r.trace) <= 1e-8)
                assert r.trace[-1] == pytest.approx(r.penalized_cut, abs=1e-8)

    def test_never_below_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(2, 8))
            g = random_graph(rng, n)
            lp = float(rng.uniform(-0.9, 1.0))
            res = run_penalized_ncut(g, lp, initial=rng.integers(0, n, size=n))
            assert res.penalized_cut >= brute_force_penalized_cut(g, lp)[0] - 1e-9

    def test_validation(self):
        g = barbell()
        with pytest.raises(ValueError):
            run_penalized_ncut(g, -5.0)
        with pytest.raises(ValueError):
            run_penalized_ncut(g, 0.5, method="magic")
        with pytest.raises(ValueError, match="indefinite"):
            run_penalized_ncut(g, 0.5, shift=0.0)
