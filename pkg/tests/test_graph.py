from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse.csgraph import shortest_path

from bindgraph.graph import (EdgeListError, Graph, ccdf_rows, compute_stats, empirical_overlap,
                             read_edge_list, write_edge_list)

from conftest import write_lines


@st.composite
def graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pairs = list(combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), max_size=len(pairs))) if pairs else []
    return Graph(n, chosen)


def brute_triangles(g):
    adj = g.adjacency().toarray().astype(bool)
    return sum(adj[a, b] and adj[a, c] and adj[b, c] for a, b, c in combinations(range(g.n), 3))


class TestEdgeListIO:
    def test_two_lines(self, tmp_path):
        g = read_edge_list(write_lines(tmp_path / "g.txt", ["0 1", "1 2"]))
        assert g.n == 3
        assert g.edges.tolist() == [[0, 1], [1, 2]]

    def test_reversed_duplicate_collapses(self, tmp_path):
        g, rep = read_edge_list(write_lines(tmp_path / "g.txt", ["0 1", "1 0"]), with_report=True)
        assert g.edges.tolist() == [[0, 1]]
        assert rep == {"self_loops": 0, "duplicates": 1}

    def test_self_loop_dropped_and_reported(self, tmp_path):
        g, rep = read_edge_list(write_lines(tmp_path / "g.txt", ["2 2"]), with_report=True)
        assert g.num_edges == 0
        assert rep["self_loops"] == 1

    def test_non_integer_reports_line(self, tmp_path):
        path = write_lines(tmp_path / "g.txt", ["0 1", "# comment", "1 x"])
        with pytest.raises(EdgeListError, match="line 3"):
            read_edge_list(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_edge_list(tmp_path / "absent.txt")

    def test_header_keeps_isolated_nodes(self, tmp_path):
        g = read_edge_list(write_lines(tmp_path / "g.txt", ["# nodes: 6", "0 1"]))
        assert g.n == 6

    @given(graphs())
    def test_write_read_round_trip(self, tmp_path_factory, g):
        path = tmp_path_factory.mktemp("rt") / "g.txt"
        write_edge_list(g, path)
        once = read_edge_list(path)
        write_edge_list(once, path)
        assert read_edge_list(path) == once == g


class TestStats:
    def test_triangle(self):
        s = compute_stats(Graph(3, [(0, 1), (1, 2), (0, 2)]))
        assert (s.triangle_count, s.gcc, s.alcc) == (1, 1.0, 1.0)

    def test_star(self):
        s = compute_stats(Graph(4, [(0, 1), (0, 2), (0, 3)]))
        assert (s.triangle_count, s.gcc, s.alcc) == (0, 0.0, 0.0)

    def test_empty_graph_gcc_zero(self):
        s = compute_stats(Graph(5))
        assert s.gcc == 0.0 and s.wedge_count == 0

    @given(graphs())
    def test_counts_and_invariants(self, g):
        s = compute_stats(g)
        deg = g.degrees()
        assert deg.sum() == 2 * g.num_edges
        assert s.triangle_count == brute_triangles(g)
        assert s.wedge_count == int(sum(d * (d - 1) // 2 for d in deg))
        if s.wedge_count:
            assert s.gcc * s.wedge_count == pytest.approx(3 * s.triangle_count)
        assert 0.0 <= s.alcc <= 1.0
        assert s.degree_ccdf[1] == np.count_nonzero(deg >= 1)

    def test_alcc_one_iff_neighbourhoods_complete(self):
        k4 = Graph(4, list(combinations(range(4), 2)))
        assert compute_stats(k4).alcc == 1.0
        k4_minus = Graph(4, list(combinations(range(4), 2))[:-1])
        assert compute_stats(k4_minus).alcc < 1.0

    @given(graphs(max_n=10))
    def test_distance_ccdf_matches_all_pairs(self, g):
        s = compute_stats(g)
        if g.num_edges == 0:
            return
        d = shortest_path(g.adjacency(), unweighted=True, directed=False)
        from scipy.sparse.csgraph import connected_components

        _, lab = connected_components(g.adjacency(), directed=False)
        big = np.argmax(np.bincount(lab))
        nodes = np.flatnonzero(lab == big)
        sub = d[np.ix_(nodes, nodes)]
        vals = sub[np.triu_indices(len(nodes), 1)]
        for k in range(1, len(s.distance_ccdf)):
            assert s.distance_ccdf[k] == pytest.approx(np.count_nonzero(vals >= k))

    def test_ccdf_rows_mean_std(self):
        rows = ccdf_rows("degree", [np.array([3, 2, 1]), np.array([3, 2])])
        assert rows[0] == {"kind": "degree", "x": 1, "mean": 2.0, "std": 0.0}
        assert rows[1]["mean"] == 0.5


class TestOverlap:
    def test_identical(self):
        g = Graph(4, [(0, 1), (2, 3)])
        assert empirical_overlap([g, g]) == 1.0

    def test_disjoint(self):
        assert empirical_overlap([Graph(4, [(0, 1)]), Graph(4, [(2, 3)])]) == 0.0

    def test_empty_is_error(self):
        with pytest.raises(ValueError):
            empirical_overlap([Graph(3), Graph(3)])

    def test_needs_two_graphs(self):
        with pytest.raises(ValueError):
            empirical_overlap([Graph(3, [(0, 1)])])
