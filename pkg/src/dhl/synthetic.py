"""Synthetic graphs: small random test graphs and a road-like large network.

The large generator stands in for a real city network when no DIMACS file is
available. It starts from a jittered grid and recursively cuts the region in
half, keeping only a handful of edges across every cut, which mimics the
small separators of road networks (rivers, highways, district borders).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .graph import Graph

NY_VERTICES = 264_346
NY_ARCS = 733_846


def random_connected_graph(n: int, rng: np.random.Generator, extra: float = 1.0, wmin: int = 1,
                           wmax: int = 100, coords: bool = False) -> Graph:
    """Random spanning tree plus about ``extra * n`` chords; weights uniform in [wmin, wmax]."""
    edges = {}
    perm = rng.permutation(n)
    for k in range(1, n):
        a, b = int(perm[k]), int(perm[rng.integers(k)])
        edges[(min(a, b), max(a, b))] = int(rng.integers(wmin, wmax + 1))
    for _ in range(int(extra * n)):
        a, b = (int(x) for x in rng.integers(n, size=2))
        if a != b:
            edges[(min(a, b), max(a, b))] = int(rng.integers(wmin, wmax + 1))
    xy = rng.random((n, 2)) if coords else None
    return Graph.from_edges(n, [(a, b, w) for (a, b), w in edges.items()], coords=xy)


def _split_region(r0, r1, c0, c1, block, crossings, rng, keep_h, keep_v):
    stack = [(r0, r1, c0, c1)]
    while stack:
        r0, r1, c0, c1 = stack.pop()
        rows, cols = r1 - r0, c1 - c0
        if rows <= block and cols <= block:
            continue
        if cols >= rows:
            cm = c0 + cols // 2
            cut = np.arange(r0, r1)
            kept = rng.choice(cut, size=min(crossings, rows), replace=False)
            keep_h[cut, cm - 1] = False
            keep_h[kept, cm - 1] = True
            stack += [(r0, r1, c0, cm), (r0, r1, cm, c1)]
        else:
            rm = r0 + rows // 2
            cut = np.arange(c0, c1)
            kept = rng.choice(cut, size=min(crossings, cols), replace=False)
            keep_v[rm - 1, cut] = False
            keep_v[rm - 1, kept] = True
            stack += [(r0, rm, c0, c1), (rm, r1, c0, c1)]


def _spanning_tree_mask(n: int, u: np.ndarray, v: np.ndarray, order: np.ndarray) -> np.ndarray:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = np.zeros(len(u), dtype=bool)
    for e in order.tolist():
        a, b = find(int(u[e])), find(int(v[e]))
        if a != b:
            parent[a] = b
            tree[e] = True
    return tree


def road_like_graph(rows: int, cols: int, target_edges: Optional[int] = None, block: int = 8,
                    crossings: int = 3, seed: int = 0) -> Graph:
    """Connected planar-ish network on a ``rows x cols`` jittered grid.

    ``target_edges`` (if below the generated count) drops random non-tree
    edges down to that many. Weights are jittered lengths times a speed
    factor, roughly 100 to 1000; integer coordinates are attached.
    """
    rng = np.random.default_rng(seed)
    n = rows * cols
    keep_h = np.ones((rows, max(cols - 1, 0)), dtype=bool)
    keep_v = np.ones((max(rows - 1, 0), cols), dtype=bool)
    _split_region(0, rows, 0, cols, block, crossings, rng, keep_h, keep_v)
    ids = np.arange(n).reshape(rows, cols)
    hr, hc = np.nonzero(keep_h)
    vr, vc = np.nonzero(keep_v)
    u = np.concatenate([ids[hr, hc], ids[vr, vc]])
    v = np.concatenate([ids[hr, hc + 1], ids[vr + 1, vc]])
    if target_edges is not None and target_edges < len(u):
        tree = _spanning_tree_mask(n, u, v, rng.permutation(len(u)))
        spare = np.flatnonzero(~tree)
        keep = np.ones(len(u), dtype=bool)
        keep[rng.choice(spare, size=len(u) - target_edges, replace=False)] = False
        u, v = u[keep], v[keep]
    gy, gx = np.divmod(np.arange(n), cols)
    xy = np.column_stack([gx * 100 + rng.integers(-30, 31, n), gy * 100 + rng.integers(-30, 31, n)])
    length = np.hypot(*(xy[u] - xy[v]).T)
    w = np.maximum(1, np.rint(length * rng.uniform(1.0, 8.0, len(u)))).astype(np.int64)
    return Graph.from_edges(n, np.column_stack([u, v, w]), coords=xy.astype(np.int64),
                            coord_missing=np.zeros(n, dtype=bool))


def ny_scale_graph(seed: int = 0) -> Graph:
    """Road-like graph with at least as many vertices and arcs as the NY network."""
    side = int(np.ceil(np.sqrt(NY_VERTICES)))
    return road_like_graph(side, side, target_edges=(NY_ARCS + 1) // 2, seed=seed)
