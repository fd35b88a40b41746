"""Reference distance computations, deliberately independent of the index code.

Everything here is plain Python over adjacency lists so a bug in the
compiled kernels cannot leak into the ground truth.
"""

from __future__ import annotations

import heapq
from typing import Dict, List, Tuple

import numpy as np

from .graph import INFINITY, Graph


class OracleError(ValueError):
    pass


def _adjacency(graph: Graph) -> List[List[Tuple[int, int]]]:
    adj: List[List[Tuple[int, int]]] = [[] for _ in range(graph.n)]
    for u, v, w in zip(graph.edge_u.tolist(), graph.edge_v.tolist(), graph.edge_w.tolist()):
        if w >= INFINITY:
            continue
        adj[u].append((v, w))
        adj[v].append((u, w))
    return adj


def _check(graph: Graph, *vs: int):
    for x in vs:
        if not 0 <= x < graph.n:
            raise OracleError(f"vertex {x} out of range [0, {graph.n})")


def _search(adj, s: int, target: int = -1, allowed=None) -> List[int]:
    dist = [INFINITY] * len(adj)
    dist[s] = 0
    heap = [(0, s)]
    done = [False] * len(adj)
    while heap:
        d, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        if x == target:
            break
        for y, w in adj[x]:
            if allowed is not None and not allowed[y]:
                continue
            nd = d + w
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def dijkstra(graph: Graph, s: int) -> np.ndarray:
    """Single-source distances; unreachable vertices get ``INFINITY``."""
    _check(graph, s)
    return np.array(_search(_adjacency(graph), s), dtype=np.int64)


def dijkstra_pair(graph: Graph, s: int, t: int) -> int:
    _check(graph, s, t)
    return int(_search(_adjacency(graph), s, target=t)[t])


def bidirectional_dijkstra(graph: Graph, s: int, t: int, adj=None) -> int:
    """Alternating forward/backward search with the usual ``top_f + top_b >= best`` stop."""
    _check(graph, s, t)
    if s == t:
        return 0
    adj = _adjacency(graph) if adj is None else adj
    dist = ({s: 0}, {t: 0})
    heaps = ([(0, s)], [(0, t)])
    settled = (set(), set())
    best = INFINITY
    while heaps[0] and heaps[1]:
        if heaps[0][0][0] + heaps[1][0][0] >= best:
            break
        side = 0 if heaps[0][0][0] <= heaps[1][0][0] else 1
        d, x = heapq.heappop(heaps[side])
        if x in settled[side]:
            continue
        settled[side].add(x)
        for y, w in adj[x]:
            nd = d + w
            if nd < dist[side].get(y, INFINITY):
                dist[side][y] = nd
                heapq.heappush(heaps[side], (nd, y))
            other = dist[1 - side].get(y)
            if other is not None and nd + other < best:
                best = nd + other
    return int(best)


def bellman_ford(graph: Graph, s: int) -> np.ndarray:
    _check(graph, s)
    dist = [INFINITY] * graph.n
    dist[s] = 0
    edges = [(u, v, w) for u, v, w in zip(graph.edge_u.tolist(), graph.edge_v.tolist(), graph.edge_w.tolist())
             if w < INFINITY]
    for _ in range(graph.n):
        changed = False
        for u, v, w in edges:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                changed = True
            if dist[v] + w < dist[u]:
                dist[u] = dist[v] + w
                changed = True
        if not changed:
            break
    return np.array([min(d, INFINITY) for d in dist], dtype=np.int64)


def _descendant_mask(hq, u: int) -> List[bool]:
    return [hq.is_ancestor(u, x) for x in range(hq.n)]


def induced_subgraph_distances(graph: Graph, hq, u: int) -> np.ndarray:
    """Distances from ``u`` inside the subgraph induced by its descendants (including ``u``).

    Non-descendants get ``INFINITY``.
    """
    _check(graph, u)
    allowed = _descendant_mask(hq, u)
    return np.array(_search(_adjacency(graph), u, allowed=allowed), dtype=np.int64)


def induced_subgraph_distance(graph: Graph, hq, u: int, v: int) -> int:
    _check(graph, u, v)
    if not hq.is_ancestor(u, v):
        raise OracleError(f"{u} is not an ancestor of {v}")
    return int(induced_subgraph_distances(graph, hq, u)[v])


def enumerate_valley_shortcuts(graph: Graph, hq, max_n: int = 12) -> Dict[Tuple[int, int], int]:
    """All ``(descendant, ancestor)`` pairs joined by a valley path, with the shortest such length.

    A path is a valley path when every intermediate vertex is a strict
    descendant of both endpoints. Exhaustive simple-path search, so only for
    tiny graphs.
    """
    if graph.n > max_n:
        raise OracleError(f"exhaustive enumeration refuses graphs with more than {max_n} vertices")
    adj = _adjacency(graph)
    n = graph.n
    below = [[a != b and hq.is_ancestor(a, b) for b in range(n)] for a in range(n)]
    best: Dict[Tuple[int, int], int] = {}

    for start in range(n):
        # simple paths whose intermediates all lie strictly below ``start``
        stack = [(start, 0, 1 << start, ())]
        while stack:
            x, length, seen, inner = stack.pop()
            for y, w in adj[x]:
                if seen >> y & 1:
                    continue
                total = length + w
                if start < y and all(below[y][z] for z in inner):
                    if not (below[start][y] or below[y][start]):
                        raise OracleError(f"valley path joins incomparable {start} and {y}")
                    key = (y, start) if below[start][y] else (start, y)
                    if total < best.get(key, INFINITY):
                        best[key] = total
                if below[start][y]:
                    stack.append((y, total, seen | (1 << y), inner + (y,)))
    return best
