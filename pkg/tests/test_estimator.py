import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dhl.estimator import DynamicDistanceIndex, check_graph, check_pairs
from dhl.oracle import dijkstra

from fixtures import paper_graph, random_connected, v


def test_params_round_trip():
    est = DynamicDistanceIndex(beta=0.3, leaf_size=4, seed=2, mode="parallel", workers=3)
    assert est.get_params() == {"beta": 0.3, "leaf_size": 4, "seed": 2, "mode": "parallel", "workers": 3}
    assert clone(est).get_params() == est.get_params()
    est.set_params(leaf_size=8)
    assert est.leaf_size == 8


def test_fit_predict_graph():
    est = DynamicDistanceIndex().fit(paper_graph())
    assert est.predict([[v(6), v(9)], [0, 0]]).tolist() == [6, 0]
    assert est.n_vertices_ == 10


def test_fit_edge_array_and_update():
    rng = np.random.default_rng(0)
    g = random_connected(rng, 40)
    rows = np.column_stack([g.edge_u, g.edge_v, g.edge_w])
    est = DynamicDistanceIndex(leaf_size=2, mode="parallel").fit(rows)
    pairs = np.column_stack([np.zeros(40, dtype=int), np.arange(40)])
    assert np.array_equal(est.predict(pairs), dijkstra(g, 0))

    rep = est.update([(int(g.edge_u[e]), int(g.edge_v[e]), 1) for e in range(5)])
    assert rep.E_delta <= 5
    g.edge_w[:5] = 1
    assert np.array_equal(est.predict(pairs), dijkstra(g, 0))


def test_fit_does_not_alias_input():
    g = paper_graph()
    est = DynamicDistanceIndex().fit(g)
    est.update([(v(7), v(4), 1)])
    assert g.weight(v(7), v(4)) == 3
    assert est.graph_.weight(v(7), v(4)) == 1


def test_validation():
    with pytest.raises(NotFittedError):
        DynamicDistanceIndex().predict([[0, 1]])
    with pytest.raises(ValueError):
        check_graph(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        check_pairs(np.zeros((3, 3)), 5)
    with pytest.raises(IndexError):
        check_pairs([[0, 5]], 5)
    assert check_pairs(np.zeros((0, 2)), 5).shape == (0, 2)
