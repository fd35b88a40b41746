import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dhl.graph import INFINITY, Graph
from dhl.query_hierarchy import QueryHierarchy, build_query_hierarchy
from dhl.oracle import (OracleError, bellman_ford, bidirectional_dijkstra, dijkstra, dijkstra_pair,
                        enumerate_valley_shortcuts, induced_subgraph_distance, induced_subgraph_distances)

from fixtures import paper_graph, paper_hierarchy, path3, path3_hierarchy, random_connected, v


def test_path_distance():
    assert dijkstra_pair(path3(), 0, 2) == 5
    assert dijkstra(path3(), 0).tolist() == [0, 2, 5]


def test_paper_distance():
    g = paper_graph()
    assert dijkstra_pair(g, v(6), v(9)) == 6
    assert bidirectional_dijkstra(g, v(6), v(9)) == 6


def test_same_vertex():
    assert bidirectional_dijkstra(paper_graph(), 3, 3) == 0


def test_unreachable_is_infinity():
    g = Graph.from_edges(4, [(0, 1, 3), (2, 3, 1)])
    assert dijkstra_pair(g, 0, 3) == INFINITY
    assert bidirectional_dijkstra(g, 0, 3) == INFINITY
    assert bellman_ford(g, 0).tolist() == [0, 3, INFINITY, INFINITY]


def test_deleted_edges_are_ignored():
    g = Graph.from_edges(3, [(0, 1, INFINITY), (1, 2, 4), (0, 2, 10)])
    assert dijkstra(g, 0).tolist() == [0, 14, 10]


def test_out_of_range():
    with pytest.raises(OracleError):
        dijkstra(path3(), 3)


def test_induced_distance_paper():
    g, hq = paper_graph(), paper_hierarchy()
    assert induced_subgraph_distance(g, hq, v(10), v(7)) == 10
    assert dijkstra_pair(g, v(10), v(7)) == 4
    assert induced_subgraph_distance(g, hq, v(4), v(4)) == 0
    with pytest.raises(OracleError):
        induced_subgraph_distance(g, hq, v(1), v(6))


def test_induced_from_root_is_graph_distance():
    g, hq = paper_graph(), paper_hierarchy()
    assert np.array_equal(induced_subgraph_distances(g, hq, v(3)), dijkstra(g, v(3)))


def test_valley_enumeration_small_cases():
    g = Graph.from_edges(2, [(0, 1, 7)])
    hq = QueryHierarchy.from_nodes(2, {"": [0, 1]})
    assert enumerate_valley_shortcuts(g, hq) == {(1, 0): 7}
    assert enumerate_valley_shortcuts(path3(), path3_hierarchy()) == {(0, 1): 2, (2, 1): 3}


def test_valley_enumeration_paper():
    found = enumerate_valley_shortcuts(paper_graph(), paper_hierarchy())
    assert found[(v(1), v(4))] == 7


def test_valley_enumeration_refuses_large_graphs():
    g = random_connected(np.random.default_rng(0), 13)
    with pytest.raises(OracleError):
        enumerate_valley_shortcuts(g, build_query_hierarchy(g))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 50))
def test_oracles_agree(seed, n):
    rng = np.random.default_rng(seed)
    g = random_connected(rng, n, extra=float(rng.uniform(0, 2)))
    s = int(rng.integers(n))
    d = dijkstra(g, s)
    assert np.array_equal(d, bellman_ford(g, s))
    assert d[s] == 0
    for a, b, w in g.edges():
        assert d[b] <= d[a] + w and d[a] <= d[b] + w
    for t in rng.integers(n, size=8).tolist():
        assert bidirectional_dijkstra(g, s, t) == dijkstra_pair(g, s, t) == d[t]
