import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dhl.graph import INFINITY, Graph, UpdateBatch, apply_batch_weights
from dhl.oracle import enumerate_valley_shortcuts
from dhl.query_hierarchy import HierarchyError, QueryHierarchy, build_query_hierarchy
from dhl.update_hierarchy import build_update_hierarchy, dhu_decrease, dhu_increase

from fixtures import (paper_graph, paper_hierarchy, path3, path3_hierarchy, random_connected,
                      recurrence_violations, v)


def _paper_triples(delta, hu):
    return {(a + 1, b + 1, x) for a, b, x in delta.triples(hu)}


def _set_weight(graph, a, b, w):
    e = graph.edge_id(a, b)
    old = int(graph.edge_w[e])
    graph.edge_w[e] = w
    return e, old


def test_path_shortcuts():
    hu = build_update_hierarchy(path3(), path3_hierarchy())
    assert hu.as_dict() == {(0, 1): 2, (2, 1): 3}
    assert hu.shortcut_weight(0, 1) == hu.shortcut_weight(1, 0) == 2
    assert hu.shortcut_weight(0, 2) is None
    assert hu.shortcut_index(0, 0) == -1


def test_triangle_matches_enumeration():
    g = Graph.from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    hq = QueryHierarchy.from_nodes(3, {"": [0, 1, 2]})
    hu = build_update_hierarchy(g, hq)
    assert hu.as_dict() == enumerate_valley_shortcuts(g, hq) == {(1, 0): 1, (2, 0): 1, (2, 1): 1}


def test_paper_shortcut_weight():
    g, hq = paper_graph(), paper_hierarchy()
    hu = build_update_hierarchy(g, hq)
    assert hu.shortcut_weight(v(1), v(4)) == 7
    # 10 sits above 1 in the order, so the route 1-5-10-4 is not a valley path
    assert hq.is_ancestor(v(10), v(1))
    assert hu.as_dict() == enumerate_valley_shortcuts(g, hq)


def test_paper_decrease():
    g, hq = paper_graph(), paper_hierarchy()
    hu = build_update_hierarchy(g, hq)
    e, _ = _set_weight(g, v(7), v(4), 1)
    delta = dhu_decrease(hu, [e], [1])
    assert _paper_triples(delta, hu) == {(7, 4, 1), (1, 4, 5), (4, 3, 6)}
    assert hu.as_dict() == build_update_hierarchy(g, hq).as_dict()


def test_paper_increase():
    g, hq = paper_graph(), paper_hierarchy()
    hu = build_update_hierarchy(g, hq)
    e, old = _set_weight(g, v(7), v(4), 5)
    delta = dhu_increase(hu, g, [e], [old])
    # payloads are pre-update weights; (4,3) is re-examined but keeps its weight via 4-10-6-3
    assert _paper_triples(delta, hu) == {(7, 4, 3), (1, 4, 7)}
    assert delta.popped == 3
    assert hu.shortcut_weight(v(7), v(4)) == 5 and hu.shortcut_weight(v(1), v(4)) == 8
    assert hu.as_dict() == build_update_hierarchy(g, hq).as_dict()


def test_decrease_to_current_weight_is_noop():
    g, hq = paper_graph(), paper_hierarchy()
    hu = build_update_hierarchy(g, hq)
    e = g.edge_id(v(5), v(4))
    assert len(dhu_decrease(hu, [e], [int(g.edge_w[e])])) == 0


def test_increase_on_dominated_edge_is_noop():
    g = Graph.from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 10)])
    hq = QueryHierarchy.from_nodes(3, {"": [0, 2], "0": [1]})  # route 0-1-2 is a valley path
    hu = build_update_hierarchy(g, hq)
    assert hu.shortcut_weight(2, 0) == 2
    e, old = _set_weight(g, 0, 2, 50)
    assert len(dhu_increase(hu, g, [e], [old])) == 0
    assert hu.shortcut_weight(2, 0) == 2


def test_structure_invariants():
    rng = np.random.default_rng(5)
    g = random_connected(rng, 150, extra=1.5)
    hq = build_query_hierarchy(g, leaf_size=4)
    hu = build_update_hierarchy(g, hq)
    w = hu.as_dict()
    for a, b, x in g.edges():
        key = (a, b) if hq.tau[a] > hq.tau[b] else (b, a)
        assert w[key] <= x
    for x in range(g.n):
        ups, _ = hu.upward(x)
        ranks = hq.tau[ups]
        assert np.all(np.diff(ranks) > 0)
        assert all(hq.is_ancestor(u, x) for u in ups.tolist())
        for i in range(len(ups)):
            for j in range(i + 1, len(ups)):
                assert (int(ups[j]), int(ups[i])) in w
    assert not recurrence_violations(g, hu)
    assert len(hu.min_weight_violations(g)) == 0


def test_downward_lists_mirror_upward():
    g = random_connected(np.random.default_rng(1), 80)
    hu = build_update_hierarchy(g, build_query_hierarchy(g, leaf_size=2))
    down = {(int(d), x) for x in range(g.n) for d in hu.downward(x)[0].tolist()}
    assert down == {(int(d), int(a)) for d, a in hu.pairs()}


def test_mismatched_sizes_rejected():
    with pytest.raises(HierarchyError):
        build_update_hierarchy(paper_graph(), path3_hierarchy())


def test_copy_is_independent():
    g, hq = paper_graph(), paper_hierarchy()
    hu = build_update_hierarchy(g, hq)
    c = hu.copy()
    c.weight[:] = 0
    assert hu.shortcut_weight(v(1), v(4)) == 7


def _random_pass(rng, g, hq, hu, k, allow_delete=True):
    """Apply one random sub-batch and run the matching maintenance; returns (eids, delta)."""
    eids = np.unique(rng.integers(g.m, size=k))
    ups = []
    for e in eids.tolist():
        old = int(g.edge_w[e])
        if allow_delete and rng.random() < 0.1:
            new = INFINITY
        elif old < INFINITY and rng.random() < 0.5:
            new = int(rng.integers(0, max(old, 1) + 1))
        else:
            new = int(rng.integers(1, 200))
        ups.append((int(g.edge_u[e]), int(g.edge_v[e]), new))
    b = apply_batch_weights(g, UpdateBatch(ups))
    deltas = []
    if b.increases:
        ie = [g.edge_id(u.u, u.v) for u in b.increases]
        deltas.append((ie, dhu_increase(hu, g, ie, [u.old_weight for u in b.increases])))
    if b.decreases:
        de = [g.edge_id(u.u, u.v) for u in b.decreases]
        deltas.append((de, dhu_decrease(hu, de, [min(u.new_weight, INFINITY) for u in b.decreases])))
    return deltas


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 50), leaf=st.sampled_from([1, 2, 4, 16]))
def test_maintenance_matches_rebuild(seed, n, leaf):
    rng = np.random.default_rng(seed)
    g = random_connected(rng, n, extra=float(rng.uniform(0, 2)))
    hq = build_query_hierarchy(g, leaf_size=leaf, seed=seed)
    hu = build_update_hierarchy(g, hq)
    shape = hu.structure_hash()
    for _ in range(5):
        for eids, delta in _random_pass(rng, g, hq, hu, int(rng.integers(1, 6))):
            ends = {int(x) for e in eids for x in (g.edge_u[e], g.edge_v[e])}
            for d, a, _ in delta.triples(hu):
                assert any(hq.is_ancestor(d, x) for x in ends)
                assert any(hq.is_ancestor(a, x) for x in ends)
            assert len(set(delta.ids.tolist())) == len(delta.ids)
        assert hu.structure_hash() == shape
        assert hu.as_dict() == build_update_hierarchy(g, hq).as_dict()
        assert not recurrence_violations(g, hu)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 12), leaf=st.sampled_from([1, 2, 4]))
def test_shortcuts_are_shortest_valley_paths(seed, n, leaf):
    rng = np.random.default_rng(seed)
    g = random_connected(rng, n, extra=float(rng.uniform(0, 2)))
    hq = build_query_hierarchy(g, leaf_size=leaf, seed=seed)
    hu = build_update_hierarchy(g, hq)
    assert hu.as_dict() == enumerate_valley_shortcuts(g, hq)
    _random_pass(rng, g, hq, hu, 3, allow_delete=False)
    assert hu.as_dict() == enumerate_valley_shortcuts(g, hq)
