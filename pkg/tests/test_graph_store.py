import warnings

import numpy as np
import pytest

from relboost.graph_store import (AttributedGraph, GraphLoadError, induced_subgraph, load_graph,
                                  random_known_unknown_split, split_folds, write_graph)
from relboost.synthgen import SynthConfig, generate


def _write(tmp_path, nodes: str, edges: str):
    n, e = tmp_path / "nodes.csv", tmp_path / "edges.csv"
    n.write_text(nodes)
    e.write_text(edges)
    return n, e


def _graph(n, edges, y=None, p=1):
    y = np.arange(n, dtype=float) if y is None else y
    return AttributedGraph.from_arrays(np.zeros((n, p)), y, edges)


class TestLoad:
    def test_three_node_file(self, tmp_path):
        g = load_graph(*_write(tmp_path, "id,x_0,y\n0,0.5,1.0\n1,1.5,2.0\n2,2.5,\n", "src,dst\n0,1\n"))
        assert g.n == 3 and g.p == 1
        assert g.known_mask.tolist() == [True, True, False]
        assert g.neighbors(0).tolist() == [1]
        assert g.neighbors(2).size == 0

    def test_dangling_endpoint_names_line(self, tmp_path):
        paths = _write(tmp_path, "id,x_0,y\n0,0,1\n1,0,2\n", "src,dst\n0,1\n1,99\n")
        with pytest.raises(GraphLoadError, match="line 3: dangling endpoint 99"):
            load_graph(*paths)

    def test_inconsistent_arity(self, tmp_path):
        paths = _write(tmp_path, "id,x_0,x_1,y\n0,0,1,1\n1,0,2\n", "src,dst\n")
        with pytest.raises(GraphLoadError, match="line 3.*arity"):
            load_graph(*paths)

    def test_malformed_value(self, tmp_path):
        paths = _write(tmp_path, "id,x_0,y\n0,abc,1\n", "src,dst\n")
        with pytest.raises(GraphLoadError, match="line 2"):
            load_graph(*paths)

    def test_non_finite_label_rejected(self, tmp_path):
        paths = _write(tmp_path, "id,x_0,y\n0,1,inf\n", "src,dst\n")
        with pytest.raises(GraphLoadError, match="finite"):
            load_graph(*paths)

    def test_self_loop(self, tmp_path):
        paths = _write(tmp_path, "id,x_0,y\n0,0,1\n1,0,2\n", "src,dst\n1,1\n")
        with pytest.raises(GraphLoadError, match="self-loop"):
            load_graph(*paths)

    def test_sparse_ids_are_remapped(self, tmp_path):
        g = load_graph(*_write(tmp_path, "id,x_0,y\n10,0,1\n7,0,2\n42,0,3\n", "src,dst\n42,10\n"))
        assert g.ids.tolist() == [10, 7, 42]
        assert g.neighbors(g.index_of(10)).tolist() == [g.index_of(42)]

    def test_duplicate_edges_warn(self, tmp_path):
        paths = _write(tmp_path, "id,x_0,y\n0,0,1\n1,0,2\n", "src,dst\n0,1\n1,0\n0,1\n")
        with pytest.warns(UserWarning, match="duplicate"):
            g = load_graph(*paths)
        assert g.n_edges == 1

    def test_synthetic_round_trip(self, tmp_path):
        g, _ = generate(SynthConfig(n=2000, seed=4))
        y = g.y.copy()
        y[::7] = np.nan
        g = g.with_labels(y)
        write_graph(g, tmp_path / "n.csv", tmp_path / "e.csv")
        h = load_graph(tmp_path / "n.csv", tmp_path / "e.csv")
        np.testing.assert_array_equal(h.X, g.X)
        np.testing.assert_array_equal(h.y, g.y)
        np.testing.assert_array_equal(h.edges, g.edges)
        np.testing.assert_array_equal(h.ids, g.ids)


class TestInvariants:
    def test_degree_sum_and_symmetry(self):
        g, _ = generate(SynthConfig(n=300, seed=1))
        assert g.degree.sum() == 2 * g.n_edges
        for i in range(g.n):
            for j in g.neighbors(i):
                assert i in g.neighbors(j)

    def test_arrays_are_read_only(self):
        g = _graph(3, [(0, 1)])
        with pytest.raises(ValueError):
            g.y[0] = 5.0

    def test_hide_labels_leaves_original(self):
        g = _graph(3, [(0, 1)])
        h = g.hide_labels([1])
        assert np.isnan(h.y[1]) and not np.isnan(g.y[1])
        assert h.indices is g.indices


class TestInducedSubgraph:
    def test_triangle(self):
        s = induced_subgraph(_graph(3, [(0, 1), (1, 2), (0, 2)]), {0, 1})
        assert s.n == 2 and s.n_edges == 1

    def test_identity(self):
        g = _graph(4, [(0, 1), (2, 3)])
        s = induced_subgraph(g, np.ones(4, dtype=bool))
        np.testing.assert_array_equal(s.edges, g.edges)
        np.testing.assert_array_equal(s.y, g.y)

    def test_path_endpoints(self):
        s = induced_subgraph(_graph(3, [(0, 1), (1, 2)]), [0, 2])
        assert s.n == 2 and s.n_edges == 0
        assert s.ids.tolist() == [0, 2]

    def test_empty_keep(self):
        with pytest.raises(ValueError, match="empty"):
            induced_subgraph(_graph(3, []), [])

    def test_known_set_has_no_unknown(self):
        y = np.array([1.0, np.nan, 3.0, np.nan])
        s = induced_subgraph(_graph(4, [(0, 1), (0, 2)], y), y == y)
        assert not np.isnan(s.y).any()


class TestFolds:
    def test_balanced(self):
        assert split_folds(_graph(10, []), 5, 0).sizes().tolist() == [2] * 5
        assert sorted(split_folds(_graph(11, []), 5, 0).sizes().tolist()) == [2, 2, 2, 2, 3]

    def test_deterministic_and_exhaustive(self):
        g = _graph(37, [])
        a, b = split_folds(g, 5, 9), split_folds(g, 5, 9)
        np.testing.assert_array_equal(a.fold_of, b.fold_of)
        members = np.concatenate([a.members(k) for k in range(5)])
        assert sorted(members.tolist()) == list(range(37))

    def test_too_many_folds(self):
        with pytest.raises(ValueError):
            split_folds(_graph(3, []), 5, 0)


class TestKnownUnknownSplit:
    def test_sizes(self):
        k, u = random_known_unknown_split(_graph(10, []), 0.8, 0)
        assert (k.size, u.size) == (8, 2)
        k, u = random_known_unknown_split(_graph(4, []), 0.5, 0)
        assert (k.size, u.size) == (2, 2)
        assert np.intersect1d(k, u).size == 0

    def test_seeds_differ(self):
        g = _graph(50, [])
        first = random_known_unknown_split(g, 0.5, 0)[0]
        assert any(not np.array_equal(first, random_known_unknown_split(g, 0.5, s)[0])
                   for s in range(1, 21))

    def test_empty_side(self):
        with pytest.raises(ValueError):
            random_known_unknown_split(_graph(3, []), 0.1, 0)


def test_from_arrays_rejects_bad_input():
    with pytest.raises(ValueError, match="dangling"):
        _graph(2, [(0, 5)])
    with pytest.raises(ValueError, match="self-loop"):
        _graph(2, [(1, 1)])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        _graph(3, [(0, 1), (1, 2)])
