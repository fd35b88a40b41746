"""Hand-built graphs shared by several test modules."""

import numpy as np

from dhl.graph import Graph
from dhl.query_hierarchy import QueryHierarchy

# ten-vertex road network, vertex ids 1..10 in the text map to 0..9 here
PAPER_EDGES = [
    (1, 5, 2), (1, 7, 4), (5, 4, 6), (5, 10, 4), (7, 4, 3), (7, 3, 5), (4, 10, 1),
    (6, 10, 4), (9, 10, 2), (6, 2, 2), (2, 8, 1), (8, 9, 3), (6, 3, 3), (4, 9, 4),
]
PAPER_NODES = {
    "": [3, 4, 10], "0": [1], "00": [5], "01": [7],
    "1": [2], "10": [8], "100": [9], "11": [6],
}


def v(k: int) -> int:
    """Internal id of the text's vertex ``k``."""
    return k - 1


def paper_graph() -> Graph:
    return Graph.from_edges(10, [(a - 1, b - 1, w) for a, b, w in PAPER_EDGES])


def paper_hierarchy() -> QueryHierarchy:
    return QueryHierarchy.from_nodes(10, {b: [k - 1 for k in m] for b, m in PAPER_NODES.items()})


def path3() -> Graph:
    return Graph.from_edges(3, [(0, 1, 2), (1, 2, 3)])


def path3_hierarchy() -> QueryHierarchy:
    return QueryHierarchy.from_nodes(3, {"": [1], "0": [0], "1": [2]})


def random_connected(rng: np.random.Generator, n: int, extra: float = 1.0, wmax: int = 100,
                     coords: bool = False) -> Graph:
    """Random spanning tree plus about ``extra * n`` chords, weights in [1, wmax]."""
    edges = {}
    perm = rng.permutation(n)
    for k in range(1, n):
        a, b = int(perm[k]), int(perm[rng.integers(k)])
        edges[(min(a, b), max(a, b))] = int(rng.integers(1, wmax + 1))
    for _ in range(int(extra * n)):
        a, b = (int(x) for x in rng.integers(n, size=2))
        if a != b:
            edges[(min(a, b), max(a, b))] = int(rng.integers(1, wmax + 1))
    xy = rng.random((n, 2)) if coords else None
    return Graph.from_edges(n, [(a, b, w) for (a, b), w in edges.items()], coords=xy)


def recurrence_violations(graph: Graph, hu) -> list:
    """Shortcuts whose weight differs from min(edge weight, best route through a common lower neighbour).

    Plain dictionaries, no compiled helpers.
    """
    inf = 2 ** 61
    w = hu.as_dict()
    edge = {}
    for a, b, x in graph.edges():
        edge[(a, b)] = edge[(b, a)] = x
    below = {}
    for (d, a) in w:
        below.setdefault(a, set()).add(d)
    bad = []
    for (d, a), x in w.items():
        best = edge.get((d, a), inf)
        for y in below.get(d, set()) & below.get(a, set()):
            best = min(best, w[(y, d)] + w[(y, a)], inf)
        if best != x:
            bad.append(((d, a), x, best))
    return bad
