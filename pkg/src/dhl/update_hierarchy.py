"""Shortcut graph over valley paths, with weight maintenance under edge updates."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from . import _kernels as K
from .graph import INFINITY, Graph
from .query_hierarchy import HierarchyError, QueryHierarchy


class ShortcutDelta(NamedTuple):
    """Shortcuts whose weight changed in one pass.

    ``payload`` holds the new weights after a decrease pass and the
    pre-pass weights after an increase pass.
    """

    ids: np.ndarray
    payload: np.ndarray
    popped: int = 0
    enqueued: int = 0

    def __len__(self) -> int:
        return len(self.ids)

    def triples(self, hu: "UpdateHierarchy") -> List[Tuple[int, int, int]]:
        return [(int(hu.src[s]), int(hu.up_nbr[s]), int(p)) for s, p in zip(self.ids, self.payload)]


def _empty_delta() -> ShortcutDelta:
    return ShortcutDelta(np.empty(0, np.int64), np.empty(0, np.int64))


@dataclass
class UpdateHierarchy:
    """Shortcuts ``s`` run from ``src[s]`` up to ``up_nbr[s]``.

    Upward lists ``up_nbr[up_ptr[v]:up_ptr[v+1]]`` are sorted by ascending
    ancestor rank; ``weight[s]`` is the mutable shortcut weight. Downward
    lists hold ``(down_nbr, down_sc)`` pairs. ``sc_edge`` maps a shortcut to
    the graph edge it shadows (or -1) and ``edge_sc`` is the inverse.
    """

    n: int
    tau: np.ndarray
    up_ptr: np.ndarray
    up_nbr: np.ndarray
    weight: np.ndarray
    sc_edge: np.ndarray
    edge_sc: np.ndarray
    down_ptr: np.ndarray = None
    down_nbr: np.ndarray = None
    down_sc: np.ndarray = None
    src: np.ndarray = None
    tkeys: np.ndarray = field(default=None, repr=False)
    tvals: np.ndarray = field(default=None, repr=False)
    shift: int = 0

    def __post_init__(self):
        counts = np.diff(self.up_ptr)
        if self.src is None:
            self.src = np.repeat(np.arange(self.n, dtype=np.int32), counts)
        if self.tkeys is None:
            keys = self.src.astype(np.int64) * self.n + self.up_nbr
            bits = max(4, int(np.ceil(np.log2(2 * max(1, len(keys)) + 1))))
            self.tkeys, self.tvals = K.ht_build(keys, bits)
            self.shift = 64 - bits
        if self.down_ptr is None:
            self.down_ptr, self.down_nbr, self.down_sc = K.transpose_upward(self.n, self.up_ptr, self.up_nbr, self.tau)
        self.flags = np.zeros(len(self.up_nbr), dtype=np.uint8)

    # ------------------------------------------------------------------ #
    @property
    def num_shortcuts(self) -> int:
        return len(self.up_nbr)

    def shortcut_index(self, u: int, v: int) -> int:
        """Index of the shortcut joining ``u`` and ``v`` or -1."""
        if not (0 <= u < self.n and 0 <= v < self.n) or u == v:
            return -1
        if self.tau[u] < self.tau[v]:
            u, v = v, u
        return int(K.ht_find_many(self.tkeys, self.tvals, self.shift, np.array([u * self.n + v], dtype=np.int64))[0])

    def shortcut_weight(self, u: int, v: int) -> Optional[int]:
        """Current weight of shortcut ``(u, v)``; ``None`` when absent."""
        s = self.shortcut_index(u, v)
        return None if s < 0 else int(self.weight[s])

    def upward(self, v: int) -> Tuple[np.ndarray, np.ndarray]:
        a, b = self.up_ptr[v], self.up_ptr[v + 1]
        return self.up_nbr[a:b], self.weight[a:b]

    def downward(self, v: int) -> Tuple[np.ndarray, np.ndarray]:
        a, b = self.down_ptr[v], self.down_ptr[v + 1]
        return self.down_nbr[a:b], self.weight[self.down_sc[a:b]]

    def pairs(self) -> np.ndarray:
        """``(descendant, ancestor)`` rows, one per shortcut."""
        return np.column_stack([self.src, self.up_nbr])

    def as_dict(self) -> dict:
        return {(int(v), int(w)): int(x) for v, w, x in zip(self.src, self.up_nbr, self.weight)}

    def structure_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.up_ptr, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.up_nbr, dtype="<i4").tobytes())
        return h.hexdigest()

    def min_weight_violations(self, graph: Graph) -> np.ndarray:
        """Shortcuts whose weight breaks the minimum-weight recurrence."""
        bad = K.min_weight_violations(self.src, self.up_nbr, self.weight, self.sc_edge, graph.edge_w,
                                      self.down_ptr, self.down_nbr, self.down_sc, self.n,
                                      self.tkeys, self.tvals, self.shift)
        return bad

    def attach_edges(self, graph: Graph) -> np.ndarray:
        """Fill the edge/shortcut cross references; returns ``edge_sc``."""
        eu = graph.edge_u.astype(np.int64)
        ev = graph.edge_v.astype(np.int64)
        flip = self.tau[eu] > self.tau[ev]
        deep = np.where(flip, eu, ev)
        high = np.where(flip, ev, eu)
        sc = K.ht_find_many(self.tkeys, self.tvals, self.shift, deep * self.n + high)
        if (sc < 0).any():
            raise HierarchyError("an edge has no matching shortcut")
        self.edge_sc = sc
        self.sc_edge = np.full(self.num_shortcuts, -1, dtype=np.int64)
        self.sc_edge[sc] = np.arange(graph.m)
        return sc

    def copy(self) -> "UpdateHierarchy":
        """Independent weights; the fixed structure arrays are shared."""
        clone = UpdateHierarchy(self.n, self.tau, self.up_ptr, self.up_nbr, self.weight.copy(), self.sc_edge,
                                self.edge_sc, self.down_ptr, self.down_nbr, self.down_sc, self.src,
                                self.tkeys, self.tvals, self.shift)
        return clone


def build_update_hierarchy(graph: Graph, hq: QueryHierarchy) -> UpdateHierarchy:
    """Contract vertices in decreasing rank without witness search."""
    if hq.n != graph.n:
        raise HierarchyError("hierarchy and graph disagree on the vertex count")
    n = graph.n
    tau = hq.tau
    order_desc = np.lexsort((np.arange(n), -tau.astype(np.int64))).astype(np.int32)
    start, count, buf, bad = K.symbolic_contraction(n, graph.indptr, graph.adj, tau, order_desc)
    if bad >= 0:
        raise HierarchyError(f"vertex {bad} is adjacent to a vertex of equal rank")
    up_ptr, up_nbr = K.pack_upward(n, start, count, buf, tau)
    weight = np.full(len(up_nbr), INFINITY, dtype=np.int64)
    hu = UpdateHierarchy(n, tau, up_ptr, up_nbr, weight, np.full(len(up_nbr), -1, dtype=np.int64),
                         np.empty(graph.m, dtype=np.int64))
    sc = hu.attach_edges(graph)
    weight[sc] = graph.edge_w
    K.contract_weights(order_desc, up_ptr, up_nbr, weight, tau, n, hu.tkeys, hu.tvals, hu.shift)
    return hu


def _seed_arrays(hu: UpdateHierarchy, eids, values):
    eids = np.asarray(eids, dtype=np.int64)
    return hu.edge_sc[eids].astype(np.int64), np.asarray(values, dtype=np.int64)


def dhu_decrease(hu: UpdateHierarchy, eids, new_weights) -> ShortcutDelta:
    """Propagate weight decreases on graph edges ``eids`` (already applied to the graph)."""
    if len(eids) == 0:
        return _empty_delta()
    sc, new = _seed_arrays(hu, eids, new_weights)
    ids, vals, popped, enq = K.dhu_decrease(sc, new, hu.src, hu.up_nbr, hu.tau, hu.up_ptr, hu.up_nbr, hu.weight,
                                            hu.n, hu.tkeys, hu.tvals, hu.shift, hu.flags)
    return ShortcutDelta(ids, vals, popped, enq)


def dhu_increase(hu: UpdateHierarchy, graph: Graph, eids, old_weights) -> ShortcutDelta:
    """Propagate weight increases on graph edges ``eids`` (already applied to ``graph``)."""
    if len(eids) == 0:
        return _empty_delta()
    sc, old = _seed_arrays(hu, eids, old_weights)
    ids, vals, popped, enq = K.dhu_increase(sc, old, hu.src, hu.up_nbr, hu.tau, hu.up_ptr, hu.up_nbr,
                                            hu.down_ptr, hu.down_nbr, hu.down_sc, hu.weight, hu.sc_edge,
                                            graph.edge_w, hu.n, hu.tkeys, hu.tvals, hu.shift, hu.flags)
    return ShortcutDelta(ids, vals, popped, enq)
