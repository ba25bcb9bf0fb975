import numpy as np
import pytest

from gradclust.graph import (
    WeightedGraph,
    avg_degree,
    build_graph,
    cosine_similarity,
    read_edge_list,
    validate_graph,
    write_edge_list,
)
from gradclust.model import Dataset

from oracles import random_weighted_graph


def dataset(rows):
    rows = np.asarray(rows, dtype=float)
    return Dataset(tuple(str(i) for i in range(len(rows))), rows)


class TestCosineSimilarity:
    def test_identical_vectors(self):
        v = np.array([0.3, -1.2, 4.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_hand_value(self):
        got = cosine_similarity(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        assert got == pytest.approx(0.7071, abs=1e-6)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            cosine_similarity(np.zeros(2), np.array([1.0, 0.0]))

    def test_result_clamped(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            u, v = rng.normal(size=(2, 4))
            assert -1.0 <= cosine_similarity(u, v) <= 1.0


class TestBuildGraph:
    def test_identical_rows_make_unit_edge(self):
        ds = dataset([[1.0, 2.0], [1.0, 2.0]])
        g = build_graph(ds, [0, 1], 0.5)
        assert g.num_edges == 1
        assert g.weighted_degree(0) == pytest.approx(1.0, abs=1e-12)
        assert g.total_weight == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_rows_no_edges(self):
        ds = dataset([[1.0, 0.0], [0.0, 1.0]])
        g = build_graph(ds, [0, 1], 0.5)
        assert g.num_edges == 0
        assert g.nodes == (0, 1)  # isolated nodes retained

    def test_threshold_is_strict(self):
        # cos == 0 exactly; threshold 0 must exclude the pair
        ds = dataset([[1.0, 0.0], [0.0, 1.0]])
        g = build_graph(ds, [0, 1], 0.0)
        assert g.num_edges == 0

    def test_zero_row_rejected(self):
        ds = dataset([[0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(ValueError, match="zero-norm"):
            build_graph(ds, [0, 1], 0.5)

    def test_bad_threshold_rejected(self):
        ds = dataset([[1.0, 0.0]])
        with pytest.raises(ValueError):
            build_graph(ds, [0], 1.0)

    def test_empty_subset_rejected(self):
        ds = dataset([[1.0, 0.0]])
        with pytest.raises(ValueError):
            build_graph(ds, [], 0.5)

    def test_subset_order_does_not_matter(self):
        rng = np.random.default_rng(1)
        ds = dataset(rng.normal(size=(12, 4)))
        a = build_graph(ds, [0, 3, 5, 7, 9], 0.2)
        b = build_graph(ds, [9, 7, 5, 3, 0], 0.2)
        assert a.nodes == b.nodes
        assert np.array_equal(a.indices, b.indices)
        assert np.array_equal(a.weights, b.weights)

    def test_rebuild_is_deterministic(self):
        rng = np.random.default_rng(2)
        ds = dataset(rng.normal(size=(20, 6)))
        a = build_graph(ds, range(20), 0.1)
        b = build_graph(ds, range(20), 0.1)
        assert np.array_equal(a.weights, b.weights)

    def test_invariants_on_random_graphs(self):
        rng = np.random.default_rng(3)
        for trial in range(5):
            ds = dataset(rng.normal(size=(25, 5)))
            threshold = float(rng.uniform(-0.5, 0.8))
            g = build_graph(ds, range(25), threshold)
            validate_graph(g, threshold)

    def test_degree_sum_twice_total_weight(self):
        rng = np.random.default_rng(4)
        ds = dataset(rng.normal(size=(30, 4)))
        g = build_graph(ds, range(30), 0.0)
        deg_sum = sum(g.weighted_degree(i) for i in g.nodes)
        assert deg_sum == pytest.approx(2.0 * g.total_weight, rel=1e-9)


class TestDegreeQueries:
    def triangle(self):
        return WeightedGraph.from_edges([0, 1, 2], [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])

    def test_isolated_node_zero_degree(self):
        g = WeightedGraph.from_edges([0, 1, 2], [(0, 1, 0.9)])
        assert g.weighted_degree(2) == 0.0

    def test_degree_sums_weights(self):
        g = WeightedGraph.from_edges([0, 1, 2], [(0, 1, 0.6), (0, 2, 0.8)])
        assert g.weighted_degree(0) == pytest.approx(1.4)

    def test_triangle_degrees(self):
        g = self.triangle()
        for node in g.nodes:
            assert g.weighted_degree(node) == pytest.approx(2.0)

    def test_unknown_node_rejected(self):
        with pytest.raises(KeyError):
            self.triangle().weighted_degree(99)

    def test_avg_degree_single_node(self):
        assert avg_degree(self.triangle(), [0]) == 0.0

    def test_avg_degree_triangle(self):
        assert avg_degree(self.triangle(), [0, 1, 2]) == pytest.approx(2.0)

    def test_avg_degree_path(self):
        g = WeightedGraph.from_edges([0, 1, 2], [(0, 1, 1.0), (1, 2, 1.0)])
        assert avg_degree(g, [0, 1, 2]) == pytest.approx(4.0 / 3.0)

    def test_avg_degree_uses_induced_subgraph(self):
        g = self.triangle()
        # inside {0, 1} only the single 0-1 edge counts
        assert avg_degree(g, [0, 1]) == pytest.approx(1.0)

    def test_avg_degree_empty_rejected(self):
        with pytest.raises(ValueError):
            avg_degree(self.triangle(), [])


class TestFromEdges:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self loop"):
            WeightedGraph.from_edges([0, 1], [(0, 0, 1.0)])

    def test_rejects_duplicate_edge(self):
        with pytest.raises(ValueError, match="duplicate"):
            WeightedGraph.from_edges([0, 1], [(0, 1, 1.0), (1, 0, 0.5)])

    def test_rejects_unknown_endpoint(self):
        with pytest.raises(ValueError, match="outside"):
            WeightedGraph.from_edges([0, 1], [(0, 7, 1.0)])

    def test_symmetry_bit_identical(self):
        for seed in range(5):
            g = random_weighted_graph(seed, 4, 15)
            validate_graph(g)


class TestEdgeListIO:
    def test_round_trip(self, tmp_path):
        g = random_weighted_graph(11, 5, 12)
        path = tmp_path / "g.edges"
        write_edge_list(g, str(path))
        h = read_edge_list(str(path))
        # isolated nodes are not representable in the text format
        connected = tuple(n for n in g.nodes if g.weighted_degree(n) > 0)
        assert h.nodes == connected
        assert h.total_weight == pytest.approx(g.total_weight, rel=1e-12)
        for node in h.nodes:
            assert h.neighbors(node) == g.neighbors(node)

    def test_bad_line_reports_location(self, tmp_path):
        path = tmp_path / "bad.edges"
        path.write_text("0 1 0.5\n0 2\n")
        with pytest.raises(ValueError, match="bad.edges:2"):
            read_edge_list(str(path))
