"""Balanced vertex separators for the recursive bisection.

Candidates come from several orderings of the vertices (coordinate
projections when coordinates exist, BFS distance fields otherwise). For each
ordering a minimum vertex cut between the two end slabs is found with a
unit-capacity max-flow, and the remaining components are packed into two
sides. A BFS-prefix boundary cut is always available as a balanced fallback.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np
from numba import njit

_BIG = np.int32(1 << 30)


class Separator(NamedTuple):
    """Vertex separator and the two sides it leaves behind (global ids)."""

    separator: np.ndarray
    left: np.ndarray
    right: np.ndarray


# --------------------------------------------------------------------------- #
# compiled helpers


@njit(cache=True)
def induced_csr(verts, indptr, adj, local):
    """CSR of the subgraph induced by ``verts``; ``local`` maps global -> local or -1."""
    m = len(verts)
    for k in range(m):
        local[verts[k]] = k
    ptr = np.zeros(m + 1, dtype=np.int64)
    for k in range(m):
        v = verts[k]
        c = 0
        for j in range(indptr[v], indptr[v + 1]):
            if local[adj[j]] >= 0:
                c += 1
        ptr[k + 1] = ptr[k] + c
    nbr = np.empty(ptr[m], dtype=np.int32)
    for k in range(m):
        v = verts[k]
        p = ptr[k]
        for j in range(indptr[v], indptr[v + 1]):
            u = local[adj[j]]
            if u >= 0:
                nbr[p] = u
                p += 1
    for k in range(m):
        local[verts[k]] = -1
    return ptr, nbr


@njit(cache=True)
def components(m, ptr, nbr, removed):
    """Component label per local vertex (-1 for removed) and component count."""
    comp = np.full(m, -1, dtype=np.int32)
    queue = np.empty(m, dtype=np.int32)
    nc = 0
    for s in range(m):
        if removed[s] or comp[s] >= 0:
            continue
        comp[s] = nc
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            x = queue[head]
            head += 1
            for j in range(ptr[x], ptr[x + 1]):
                y = nbr[j]
                if not removed[y] and comp[y] < 0:
                    comp[y] = nc
                    queue[tail] = y
                    tail += 1
        nc += 1
    return comp, nc


@njit(cache=True)
def bfs_levels(m, ptr, nbr, start):
    """Hop distance from ``start``; unreachable vertices get -1."""
    dist = np.full(m, -1, dtype=np.int32)
    queue = np.empty(m, dtype=np.int32)
    dist[start] = 0
    queue[0] = start
    head = 0
    tail = 1
    while head < tail:
        x = queue[head]
        head += 1
        for j in range(ptr[x], ptr[x + 1]):
            y = nbr[j]
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue[tail] = y
                tail += 1
    return dist


@njit(cache=True)
def bfs_order(m, ptr, nbr, start):
    """BFS visiting order covering every component, beginning at ``start``."""
    seen = np.zeros(m, dtype=np.bool_)
    order = np.empty(m, dtype=np.int32)
    tail = 0
    head = 0
    nxt = 0
    s = start
    while tail < m:
        if seen[s]:
            while seen[nxt]:
                nxt += 1
            s = nxt
        seen[s] = True
        order[tail] = s
        tail += 1
        while head < tail:
            x = order[head]
            head += 1
            for j in range(ptr[x], ptr[x + 1]):
                y = nbr[j]
                if not seen[y]:
                    seen[y] = True
                    order[tail] = y
                    tail += 1
    return order


@njit(cache=True)
def prefix_boundary_cut(m, ptr, nbr, order, half):
    """Vertices outside the first ``half`` of ``order`` that touch it."""
    in_a = np.zeros(m, dtype=np.bool_)
    for k in range(half):
        in_a[order[k]] = True
    cut = np.zeros(m, dtype=np.bool_)
    for k in range(half):
        x = order[k]
        for j in range(ptr[x], ptr[x + 1]):
            y = nbr[j]
            if not in_a[y]:
                cut[y] = True
    return cut


@njit(cache=True)
def min_vertex_cut(m, ptr, nbr, src, snk, limit):
    """Minimum vertex cut separating ``src`` from ``snk`` (unit capacities).

    Non-terminal vertices have capacity one and terminals are uncuttable.
    Returns ``(flow, cut)``; when the flow exceeds ``limit`` the search stops
    early and ``cut`` is empty.
    """
    nn = 2 * m + 2
    S = 2 * m
    T = 2 * m + 1
    deg = np.zeros(nn, dtype=np.int64)
    for v in range(m):
        d = ptr[v + 1] - ptr[v]
        deg[v] += 1 + d          # in->out, reverse of u_out->v_in
        deg[m + v] += 1 + d      # reverse in->out, out->u_in
        if src[v]:
            deg[v] += 1
            deg[S] += 1
        if snk[v]:
            deg[m + v] += 1
            deg[T] += 1
    head = np.zeros(nn + 1, dtype=np.int64)
    for x in range(nn):
        head[x + 1] = head[x] + deg[x]
    na = head[nn]
    to = np.empty(na, dtype=np.int32)
    cap = np.empty(na, dtype=np.int32)
    rev = np.empty(na, dtype=np.int64)
    fill = head[:-1].copy()

    for v in range(m):
        a = fill[v]
        b = fill[m + v]
        to[a] = m + v
        cap[a] = _BIG if (src[v] or snk[v]) else 1
        rev[a] = b
        to[b] = v
        cap[b] = 0
        rev[b] = a
        fill[v] += 1
        fill[m + v] += 1
        for j in range(ptr[v], ptr[v + 1]):
            u = nbr[j]
            a = fill[m + v]
            b = fill[u]
            to[a] = u
            cap[a] = _BIG
            rev[a] = b
            to[b] = m + v
            cap[b] = 0
            rev[b] = a
            fill[m + v] += 1
            fill[u] += 1
        if src[v]:
            a = fill[S]
            b = fill[v]
            to[a] = v
            cap[a] = _BIG
            rev[a] = b
            to[b] = S
            cap[b] = 0
            rev[b] = a
            fill[S] += 1
            fill[v] += 1
        if snk[v]:
            a = fill[m + v]
            b = fill[T]
            to[a] = T
            cap[a] = _BIG
            rev[a] = b
            to[b] = m + v
            cap[b] = 0
            rev[b] = a
            fill[m + v] += 1
            fill[T] += 1

    level = np.empty(nn, dtype=np.int32)
    queue = np.empty(nn, dtype=np.int32)
    it = np.empty(nn, dtype=np.int64)
    stack = np.empty(nn, dtype=np.int32)
    path = np.empty(nn, dtype=np.int64)
    flow = 0
    while True:
        level[:] = -1
        level[S] = 0
        queue[0] = S
        qh = 0
        qt = 1
        while qh < qt:
            x = queue[qh]
            qh += 1
            for a in range(head[x], head[x + 1]):
                if cap[a] > 0 and level[to[a]] < 0:
                    level[to[a]] = level[x] + 1
                    queue[qt] = to[a]
                    qt += 1
        if level[T] < 0:
            break
        it[:] = head[:-1]
        sp = 0
        stack[0] = S
        while sp >= 0:
            x = stack[sp]
            if x == T:
                for k in range(sp):
                    a = path[k]
                    cap[a] -= 1
                    cap[rev[a]] += 1
                flow += 1
                if flow > limit:
                    return flow, np.zeros(m, dtype=np.bool_)
                sp = 0
                continue
            advanced = False
            while it[x] < head[x + 1]:
                a = it[x]
                y = to[a]
                if cap[a] > 0 and level[y] == level[x] + 1:
                    path[sp] = a
                    sp += 1
                    stack[sp] = y
                    advanced = True
                    break
                it[x] += 1
            if not advanced:
                level[x] = -1
                sp -= 1
    # residual reachability from S
    reach = np.zeros(nn, dtype=np.bool_)
    reach[S] = True
    queue[0] = S
    qh = 0
    qt = 1
    while qh < qt:
        x = queue[qh]
        qh += 1
        for a in range(head[x], head[x + 1]):
            y = to[a]
            if cap[a] > 0 and not reach[y]:
                reach[y] = True
                queue[qt] = y
                qt += 1
    cut = np.zeros(m, dtype=np.bool_)
    for v in range(m):
        if reach[v] and not reach[m + v]:
            cut[v] = True
    return flow, cut


# --------------------------------------------------------------------------- #
# candidate evaluation


@njit(cache=True)
def pack_components(m, ptr, nbr, cut):
    """Greedy two-bin packing of the components left after removing ``cut``.

    Largest component first, each into the lighter side. Returns the side
    per vertex (-1 on the cut) and both loads.
    """
    comp, nc = components(m, ptr, nbr, cut)
    sizes = np.zeros(nc, dtype=np.int64)
    for x in range(m):
        if comp[x] >= 0:
            sizes[comp[x]] += 1
    order = np.argsort(-sizes, kind="mergesort")
    side = np.empty(nc, dtype=np.int8)
    load0 = 0
    load1 = 0
    for c in order:
        if load0 <= load1:
            side[c] = 0
            load0 += sizes[c]
        else:
            side[c] = 1
            load1 += sizes[c]
    assignment = np.full(m, -1, dtype=np.int8)
    for x in range(m):
        if comp[x] >= 0:
            assignment[x] = side[comp[x]]
    return assignment, load0, load1


def _projections(m, ptr, nbr, xy, rng):
    """Vertex orderings to sweep: coordinate axes or BFS distance fields."""
    if xy is not None:
        x = xy[:, 0].astype(np.float64)
        y = xy[:, 1].astype(np.float64)
        keys = [x, y, x + y, x - y]
        return [np.lexsort((np.arange(m), k)) for k in keys]
    start = int(rng.integers(m))
    d0 = bfs_levels(m, ptr, nbr, start)
    p1 = int(np.argmax(d0))
    d1 = bfs_levels(m, ptr, nbr, p1).astype(np.int64)
    far = np.where(d1 < 0, np.int64(m + 1), d1)
    p2 = int(np.argmax(np.where(d1 < 0, -1, d1)))
    d2 = bfs_levels(m, ptr, nbr, p2).astype(np.int64)
    d2 = np.where(d2 < 0, np.int64(m + 1), d2)
    ids = np.arange(m)
    return [np.lexsort((ids, far)), np.lexsort((ids, far - d2))]


def _layer_cuts(m, ptr, nbr, beta, rng, tries: int = 8):
    """BFS layers from a peripheral vertex whose prefix mass is near the middle."""
    d0 = bfs_levels(m, ptr, nbr, int(rng.integers(m)))
    p1 = int(np.argmax(d0))
    lv = bfs_levels(m, ptr, nbr, p1)
    reached = lv[lv >= 0]
    counts = np.bincount(reached)
    before = np.concatenate([[0], np.cumsum(counts)[:-1]])
    mid = np.abs(before + counts / 2.0 - m / 2.0)
    for k in np.argsort(mid, kind="stable")[:tries]:
        yield lv == k


def split_local(m, ptr, nbr, beta, xy=None, seed=0):
    """Separator for a local CSR graph; returns ``(cut mask, side assignment)``.

    Side assignment is 0/1 for kept vertices and -1 for separator vertices.
    Cuts that leave both sides nonempty are preferred, then smaller cuts, then
    better balance.
    """
    rng = np.random.default_rng(seed)
    bound = (1.0 - beta) * m
    best = None  # (key, cut, assignment)

    def consider(cut, assignment=None):
        nonlocal best
        if assignment is None:
            assignment, a, b = pack_components(m, ptr, nbr, cut)
        else:
            a, b = int((assignment == 0).sum()), int((assignment == 1).sum())
        lo, hi = min(a, b), max(a, b)
        if hi > bound or hi == 0:
            return
        key = (0 if lo > 0 else 1, m - a - b, hi)
        if best is None or key < best[0]:
            best = (key, cut, assignment)

    consider(np.zeros(m, dtype=np.bool_))
    if best is None:
        f = max(beta, 0.25)
        slab = min(max(1, int(np.ceil(f * m))), m // 2)
        for order in _projections(m, ptr, nbr, xy, rng):
            src = np.zeros(m, dtype=np.bool_)
            snk = np.zeros(m, dtype=np.bool_)
            src[order[:slab]] = True
            snk[order[m - slab:]] = True
            limit = m if best is None or best[0][0] else best[0][1]
            flow, cut = min_vertex_cut(m, ptr, nbr, src, snk, limit)
            if flow <= limit:
                consider(cut)
        for cut in _layer_cuts(m, ptr, nbr, beta, rng):
            consider(cut)
        order = bfs_order(m, ptr, nbr, int(rng.integers(m)))
        half = m // 2
        cut = prefix_boundary_cut(m, ptr, nbr, order, half)
        natural = np.ones(m, dtype=np.int8)
        natural[order[:half]] = 0
        natural[cut] = -1
        consider(cut)
        consider(cut, natural)
    assert best is not None, "prefix cut is always balanced"
    _, cut, assignment = best
    return cut, assignment


def claim_one(cut, assignment):
    """Move one vertex of the heavier side into an empty separator."""
    if cut.any():
        return cut, assignment
    heavy = 0 if (assignment == 0).sum() >= (assignment == 1).sum() else 1
    v = int(np.flatnonzero(assignment == heavy)[0])
    cut, assignment = cut.copy(), assignment.copy()
    cut[v] = True
    assignment[v] = -1
    return cut, assignment


def find_separator(graph, beta: float = 0.2, coords=None, vertices=None, seed: int = 0) -> Separator:
    """Balanced vertex separator of ``graph`` (or of the subgraph on ``vertices``).

    Every component left after removing the separator lies wholly on one side
    and each side holds at most ``(1 - beta)`` of the vertices.
    """
    if not 0.0 < beta <= 0.5:
        raise ValueError(f"beta must lie in (0, 0.5], got {beta}")
    verts = np.arange(graph.n, dtype=np.int32) if vertices is None else np.asarray(vertices, dtype=np.int32)
    if len(verts) < 2:
        raise ValueError("a separator needs at least two vertices")
    local = np.full(graph.n, -1, dtype=np.int64)
    ptr, nbr = induced_csr(verts, graph.indptr, graph.adj, local)
    xy = _local_coords(coords, verts)
    cut, assignment = split_local(len(verts), ptr, nbr, beta, xy, seed)
    return Separator(np.sort(verts[cut]), np.sort(verts[assignment == 0]), np.sort(verts[assignment == 1]))


def _local_coords(coords, verts) -> Optional[np.ndarray]:
    if coords is None:
        return None
    xy = np.asarray(getattr(coords, "xy", coords))
    missing = getattr(coords, "missing", None)
    if missing is not None and np.asarray(missing)[verts].any():
        return None
    return xy[verts]
