"""Incremental label maintenance after edge-weight decreases and increases."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import List, Optional

import numpy as np

from . import _kernels as K
from .graph import GraphError, UpdateBatch, WeightUpdate, _weight_sum_ok, classify_batch, update_arrays
from .labelling import HierarchicalIndex
from .update_hierarchy import dhu_decrease, dhu_increase


@dataclass
class MaintenanceReport:
    """Work done by one maintenance pass (or several, merged with ``+``)."""

    E_delta: int = 0
    S_delta: int = 0
    L_delta: int = 0
    popped: int = 0
    enqueued: int = 0
    shortcut_ns: int = 0
    phase1_ns: int = 0
    phase2_ns: int = 0

    def __add__(self, other: "MaintenanceReport") -> "MaintenanceReport":
        return MaintenanceReport(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    @property
    def total_ns(self) -> int:
        return self.shortcut_ns + self.phase1_ns + self.phase2_ns

    def as_row(self) -> dict:
        return asdict(self)

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]


def _as_updates(updates) -> List[WeightUpdate]:
    if isinstance(updates, UpdateBatch):
        return list(updates.updates)
    return [u if isinstance(u, WeightUpdate) else WeightUpdate(*u) for u in updates]


def _split_columns(qv: np.ndarray, qi: np.ndarray, tau: np.ndarray, workers: int):
    """Shard work items by column ``i mod workers``; each shard sorted by (column, rank)."""
    shards = []
    for w in range(workers):
        mask = (qi % workers) == w
        v, i = qv[mask], qi[mask]
        order = np.lexsort((v, tau[v], i))
        v, i = v[order], i[order]
        starts = np.flatnonzero(np.r_[True, i[1:] != i[:-1]]) if len(i) else np.empty(0, np.int64)
        col_ptr = np.r_[starts, len(i)].astype(np.int64)
        shards.append((col_ptr, v.astype(np.int64), i.astype(np.int64)))
    return shards


def _run_shards(kernel, shards, args, workers: int):
    if workers == 1:
        return [kernel(*shard, *args) for shard in shards]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda shard: kernel(*shard, *args), shards))


def dhl_decrease(index: HierarchicalIndex, updates, workers: Optional[int] = None) -> MaintenanceReport:
    """Repair shortcuts and labels after decreases already written to the graph.

    ``workers=None`` runs the sequential pass; an integer runs the
    column-parallel phase 2 with that many threads.
    """
    ups = _as_updates(updates)
    report = MaintenanceReport(E_delta=len(ups))
    if not ups:
        return report
    graph, hq, hu, lab = index.graph, index.hq, index.hu, index.labels
    eids, _, new = update_arrays(graph, ups)
    t0 = time.perf_counter_ns()
    delta = dhu_decrease(hu, eids, new)
    t1 = time.perf_counter_ns()
    qv, qi, ch_idx, ch_old = K.dec_phase1(delta.ids, delta.payload, hu.src, hu.up_nbr, hq.tau, lab.off,
                                          lab.entries, lab.flags)
    t2 = time.perf_counter_ns()
    if workers is None:
        ch_idx, ch_old, popped, enq = K.dec_phase2(qv, qi, hq.tau, lab.off, lab.entries, hu.down_ptr, hu.down_nbr,
                                   lab.flags, ch_idx, ch_old)
        changed = K.settle_changes(ch_idx, ch_old, lab.entries, lab.flags)
    else:
        changed, popped, enq = _parallel_phase2(K.dec_phase2_columns, index, qv, qi, workers,
                                                (hq.tau, lab.off, lab.entries, hu.down_ptr, hu.down_nbr,
                                                 hu.down_sc, hu.weight, lab.flags), ch_idx, ch_old)
    t3 = time.perf_counter_ns()
    report.S_delta = len(delta)
    report.L_delta = int(changed)
    report.popped = int(popped + delta.popped)
    report.enqueued = int(enq + delta.enqueued)
    report.shortcut_ns, report.phase1_ns, report.phase2_ns = t1 - t0, t2 - t1, t3 - t2
    return report


def dhl_increase(index: HierarchicalIndex, updates, workers: Optional[int] = None) -> MaintenanceReport:
    """Repair shortcuts and labels after increases already written to the graph.

    Every update must carry its ``old_weight``.
    """
    ups = _as_updates(updates)
    report = MaintenanceReport(E_delta=len(ups))
    if not ups:
        return report
    if any(u.old_weight is None for u in ups):
        raise GraphError("increase maintenance needs the old weight of every update")
    graph, hq, hu, lab = index.graph, index.hq, index.hu, index.labels
    eids, old, _ = update_arrays(graph, ups)
    t0 = time.perf_counter_ns()
    delta = dhu_increase(hu, graph, eids, old)
    t1 = time.perf_counter_ns()
    qv, qi = K.inc_phase1(delta.ids, delta.payload, hu.src, hu.up_nbr, hq.tau, lab.off, lab.entries, lab.flags)
    t2 = time.perf_counter_ns()
    if workers is None:
        ch_idx, ch_old, popped, enq = K.inc_phase2(qv, qi, hq.tau, lab.off, lab.entries, hu.up_ptr, hu.up_nbr,
                                                   hu.weight, hu.down_ptr, hu.down_nbr, lab.flags)
        changed = K.settle_changes(ch_idx, ch_old, lab.entries, lab.flags)
    else:
        changed, popped, enq = _parallel_phase2(K.inc_phase2_columns, index, qv, qi, workers,
                                                (hq.tau, lab.off, lab.entries, hu.up_ptr, hu.up_nbr, hu.weight,
                                                 hu.down_ptr, hu.down_nbr, hu.down_sc, lab.flags))
    t3 = time.perf_counter_ns()
    report.S_delta = len(delta)
    report.L_delta = int(changed)
    report.popped = int(popped + delta.popped)
    report.enqueued = int(enq + delta.enqueued)
    report.shortcut_ns, report.phase1_ns, report.phase2_ns = t1 - t0, t2 - t1, t3 - t2
    return report


def _parallel_phase2(kernel, index, qv, qi, workers, args, ch_idx=None, ch_old=None):
    if workers < 1:
        raise ValueError("workers must be positive")
    lab = index.labels
    shards = _split_columns(qv, qi, index.hq.tau, workers)
    results = _run_shards(kernel, shards, args, workers)
    idx = [r[0] for r in results]
    old = [r[1] for r in results]
    if ch_idx is not None:
        # entries already written by phase 1 keep their pre-pass values
        idx.insert(0, ch_idx)
        old.insert(0, ch_old)
    changed = K.settle_changes(np.concatenate(idx), np.concatenate(old), lab.entries, lab.flags)
    return changed, sum(r[2] for r in results), sum(r[3] for r in results)


def dhl_decrease_parallel(index: HierarchicalIndex, updates, workers: int = 2) -> MaintenanceReport:
    return dhl_decrease(index, updates, workers=workers)


def dhl_increase_parallel(index: HierarchicalIndex, updates, workers: int = 2) -> MaintenanceReport:
    return dhl_increase(index, updates, workers=workers)


def apply_batch(index: HierarchicalIndex, batch, mode: str = "sequential", workers: int = 2) -> MaintenanceReport:
    """Apply a mixed batch: increases first, then decreases.

    The batch is validated against the graph before anything changes, so a
    bad edge or weight rejects it as a whole.
    """
    if mode not in ("sequential", "parallel", "seq", "par"):
        raise ValueError(f"unknown mode {mode!r}")
    par = workers if mode in ("parallel", "par") else None
    if not isinstance(batch, UpdateBatch):
        batch = UpdateBatch(batch)
    graph = index.graph
    inc, dec = classify_batch(graph, batch)
    trial = graph.edge_w.copy()
    for sub in (inc, dec):
        if len(sub):
            eids, _, new = update_arrays(graph, sub.updates)
            trial[eids] = new
    if not _weight_sum_ok(trial):
        raise GraphError("sum of finite edge weights reaches INFINITY")

    report = MaintenanceReport()
    for sub, fn in ((inc, dhl_increase), (dec, dhl_decrease)):
        if not len(sub):
            continue
        eids, _, new = update_arrays(graph, sub.updates)
        graph.edge_w[eids] = new
        report = report + fn(index, sub, workers=par)
    return report
