"""Hierarchical 2-hop labels and distance queries."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels as K
from .graph import INFINITY, Graph
from .query_hierarchy import QueryHierarchy, build_query_hierarchy
from .update_hierarchy import UpdateHierarchy, build_update_hierarchy


@dataclass
class Labelling:
    """Flat label store: ``L(v)`` is ``entries[off[v]:off[v+1]]``, length ``tau(v) + 1``.

    Entry ``i`` of ``L(v)`` is the distance from the rank-``i`` ancestor of
    ``v`` to ``v`` inside the subgraph induced by that ancestor's descendants.
    """

    off: np.ndarray
    entries: np.ndarray
    flags: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.flags is None:
            self.flags = np.zeros(len(self.entries), dtype=np.uint8)

    @property
    def n(self) -> int:
        return len(self.off) - 1

    def label(self, v: int) -> np.ndarray:
        return self.entries[self.off[v]:self.off[v + 1]]

    def entry(self, v: int, i: int) -> int:
        if not 0 <= v < self.n:
            raise IndexError(f"vertex {v} out of range")
        length = self.off[v + 1] - self.off[v]
        if not 0 <= i < length:
            raise IndexError(f"position {i} exceeds rank {length - 1} of vertex {v}")
        return int(self.entries[self.off[v] + i])

    def copy(self) -> "Labelling":
        return Labelling(self.off, self.entries.copy())


class LabelStats(NamedTuple):
    entries: int
    bytes: int
    max_length: int


def build_labels(hq: QueryHierarchy, hu: UpdateHierarchy) -> Labelling:
    """Top-down label construction in increasing rank."""
    off = np.zeros(hq.n + 1, dtype=np.int64)
    off[1:] = np.cumsum(hq.tau.astype(np.int64) + 1)
    entries = K.build_labels(hq.order_by_rank(), hq.tau, off, hu.up_ptr, hu.up_nbr, hu.weight)
    return Labelling(off, entries)


@dataclass
class HierarchicalIndex:
    """The graph, both hierarchies and the labelling over one vertex universe."""

    graph: Graph
    hq: QueryHierarchy
    hu: UpdateHierarchy
    labels: Labelling
    meta: dict = field(default_factory=dict)

    @classmethod
    def build(cls, graph: Graph, beta: float = 0.2, coords=None, leaf_size: int = 16, seed: int = 0,
              hq: Optional[QueryHierarchy] = None, **meta) -> "HierarchicalIndex":
        if hq is None:
            hq = build_query_hierarchy(graph, beta=beta, coords=coords, leaf_size=leaf_size, seed=seed)
        hu = build_update_hierarchy(graph, hq)
        labels = build_labels(hq, hu)
        info = {"beta": hq.beta, "seed": seed, "leaf_size": leaf_size}
        info.update(meta)
        return cls(graph, hq, hu, labels, info)

    @property
    def n(self) -> int:
        return self.graph.n

    def query(self, s: int, t: int) -> int:
        return query(self, s, t)

    def copy(self) -> "HierarchicalIndex":
        return HierarchicalIndex(self.graph.copy(), self.hq, self.hu.copy(), self.labels.copy(), dict(self.meta))


def _check_ids(index: HierarchicalIndex, ids: np.ndarray):
    bad = (ids < 0) | (ids >= index.n)
    if bad.any():
        raise IndexError(f"vertex id {int(ids[bad][0])} out of range [0, {index.n})")


def query_many(index: HierarchicalIndex, ss, tt) -> np.ndarray:
    """Exact distances for aligned arrays of sources and targets."""
    ss = np.asarray(ss, dtype=np.int64)
    tt = np.asarray(tt, dtype=np.int64)
    if ss.shape != tt.shape:
        raise ValueError("sources and targets must have the same length")
    _check_ids(index, ss)
    _check_ids(index, tt)
    hq, lab = index.hq, index.labels
    return K.query_many(ss, tt, hq.tau, hq.vnode, hq.node_bits, hq.node_depth, hq.anc_ptr, hq.anc_end,
                        lab.off, lab.entries)


def query(index: HierarchicalIndex, s: int, t: int) -> int:
    """Exact distance between ``s`` and ``t``; ``INFINITY`` when disconnected."""
    return int(query_many(index, [s], [t])[0])


def label_entry(index: HierarchicalIndex, v: int, i: int) -> int:
    return index.labels.entry(v, i)


def label_stats(index: HierarchicalIndex) -> LabelStats:
    lab = index.labels
    lengths = np.diff(lab.off)
    return LabelStats(int(len(lab.entries)), int(lab.entries.nbytes + lab.off.nbytes),
                      int(lengths.max(initial=0)))


def unreachable(d: int) -> bool:
    return d >= INFINITY
