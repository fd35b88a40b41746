"""End-to-end acceptance checks, one test per criterion.

Each test prints ``criterion N: PASS|FAIL ...``; the lines are repeated in
the pytest terminal summary. Criterion 8 is informational and never fails
the run. The large-graph criteria use ``DHL_NY_GR`` (plus optional
``DHL_NY_CO``) when set and otherwise a synthetic road-like graph of the
same size.
"""

import os
import time

import numpy as np
import pytest

from dhl.graph import INFINITY, UpdateBatch, classify_batch, read_dimacs
from dhl.indexfile import dumps
from dhl.labelling import HierarchicalIndex, build_labels, label_stats, query_many
from dhl.maintenance import apply_batch
from dhl.oracle import dijkstra, dijkstra_pair, enumerate_valley_shortcuts, induced_subgraph_distances
from dhl.synthetic import ny_scale_graph, random_connected_graph
from dhl.update_hierarchy import build_update_hierarchy
from dhl.workload import distance_bands, external_to_internal, x2_restore

from fixtures import recurrence_violations

LEAVES = (1, 2, 4, 16)


def _graph(rng, n, wmin=1, wmax=100, coords=False):
    return random_connected_graph(n, rng, extra=float(rng.uniform(0.0, 2.0)), wmin=wmin, wmax=wmax,
                                  coords=coords)


def _mixed_batch(rng, g, k):
    """Random decreases, increases, deletions (INFINITY) and revivals of deleted edges."""
    ups = []
    for e in rng.integers(g.m, size=k).tolist():
        old = int(g.edge_w[e])
        r = rng.random()
        if old >= INFINITY or r < 0.4:
            new = int(rng.integers(1, 101)) if old >= INFINITY else int(rng.integers(1, old + 1))
        elif r < 0.9:
            new = int(rng.integers(old, 201))
        else:
            new = INFINITY
        ups.append((int(g.edge_u[e]), int(g.edge_v[e]), new))
    return UpdateBatch(ups)


def test_criterion_1_exact_queries(record_criterion):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    bad, pairs = 0, 0
    for k in range(200):
        n = int(rng.integers(5, 201))
        g = _graph(rng, n, coords=bool(k % 2))
        idx = HierarchicalIndex.build(g, leaf_size=LEAVES[k % 4], seed=k)
        ss, tt = np.divmod(np.arange(n * n), n)
        got = query_many(idx, ss, tt).reshape(n, n)
        ref = np.stack([dijkstra(g, s) for s in range(n)])
        bad += int((got != ref).sum())
        pairs += n * n
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 120
    record_criterion(1, ok, f"{pairs} pairs on 200 graphs, {bad} mismatches, {elapsed:.1f}s (limit 120s)")
    assert ok


def test_criterion_2_label_semantics(record_criterion):
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    bad = cells = 0
    for k in range(100):
        n = int(rng.integers(2, 51))
        g = _graph(rng, n)
        idx = HierarchicalIndex.build(g, leaf_size=LEAVES[k % 4], seed=k)
        hq, lab = idx.hq, idx.labels
        for u in range(n):
            dist = induced_subgraph_distances(g, hq, u)
            i = hq.rank(u)
            for x in range(n):
                if hq.is_ancestor(u, x):
                    cells += 1
                    bad += lab.entry(x, i) != dist[x]
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 60
    record_criterion(2, ok, f"{cells} label entries on 100 graphs, {bad} mismatches, {elapsed:.1f}s (limit 60s)")
    assert ok


def _finite(d):
    return {k: x for k, x in d.items() if x < INFINITY}


def test_criterion_3_valley_paths(record_criterion):
    rng = np.random.default_rng(303)
    t0 = time.perf_counter()
    problems = []
    passes = 0
    for k in range(100):
        n = int(rng.integers(2, 13))
        g = _graph(rng, n)
        idx = HierarchicalIndex.build(g, leaf_size=LEAVES[k % 3], seed=k)
        if idx.hu.as_dict() != enumerate_valley_shortcuts(g, idx.hq):
            problems.append((k, "build set"))
        if recurrence_violations(g, idx.hu):
            problems.append((k, "build recurrence"))
        for _ in range(5):
            inc, dec = classify_batch(g, _mixed_batch(rng, g, int(rng.integers(1, 5))))
            for sub in (inc, dec):
                if not len(sub):
                    continue
                apply_batch(idx, UpdateBatch([(u.u, u.v, u.new_weight) for u in sub.updates]))
                passes += 1
                have = idx.hu.as_dict()
                if recurrence_violations(g, idx.hu):
                    problems.append((k, "recurrence after pass"))
                ref = enumerate_valley_shortcuts(g, idx.hq)
                # deleted edges keep their shortcut slot at INFINITY
                if _finite(have) != ref or not set(ref) <= set(have):
                    problems.append((k, "valley set after pass"))
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 60
    record_criterion(3, ok, f"100 graphs, {passes} maintenance passes, {len(problems)} problems, "
                            f"{elapsed:.1f}s (limit 60s)")
    assert ok, problems[:5]


@pytest.fixture(scope="module")
def update_runs():
    """Criteria 4-6: sequential and 1/2/8-worker maintenance over 100 graphs x 20 batches."""
    rng = np.random.default_rng(404)
    out = {"rebuild_mismatch": 0, "parallel_mismatch": 0, "structure_changes": 0, "batches": 0,
           "seq_seconds": 0.0}
    for k in range(100):
        n = int(rng.integers(2, 51))
        g = _graph(rng, n)
        seq = HierarchicalIndex.build(g, leaf_size=LEAVES[k % 4], seed=k)
        par = {w: seq.copy() for w in (1, 2, 8)}
        shape = seq.hu.structure_hash()
        for _ in range(20):
            batch = _mixed_batch(rng, g, int(rng.integers(1, 11)))
            rows = [(u.u, u.v, u.new_weight) for u in batch.updates]
            t0 = time.perf_counter()
            apply_batch(seq, UpdateBatch(rows))
            hu = build_update_hierarchy(seq.graph, seq.hq)
            lab = build_labels(seq.hq, hu)
            out["seq_seconds"] += time.perf_counter() - t0
            out["batches"] += 1
            if not (np.array_equal(hu.weight, seq.hu.weight) and np.array_equal(lab.entries, seq.labels.entries)):
                out["rebuild_mismatch"] += 1
            for w, idx in par.items():
                apply_batch(idx, UpdateBatch(rows), mode="parallel", workers=w)
                if not np.array_equal(idx.labels.entries, seq.labels.entries) or \
                        not np.array_equal(idx.hu.weight, seq.hu.weight):
                    out["parallel_mismatch"] += 1
                if idx.hu.structure_hash() != shape:
                    out["structure_changes"] += 1
            if seq.hu.structure_hash() != shape:
                out["structure_changes"] += 1
    return out


def test_criterion_4_rebuild_equivalence(update_runs, record_criterion):
    r = update_runs
    ok = r["rebuild_mismatch"] == 0 and r["seq_seconds"] < 180
    record_criterion(4, ok, f"{r['batches']} mixed batches (with deletions), {r['rebuild_mismatch']} differ "
                            f"from rebuild, {r['seq_seconds']:.1f}s (limit 180s)")
    assert ok


def test_criterion_5_parallel_equivalence(update_runs, record_criterion):
    r = update_runs
    ok = r["parallel_mismatch"] == 0
    record_criterion(5, ok, f"1/2/8 workers over {r['batches']} batches, {r['parallel_mismatch']} "
                            f"labellings differ from sequential")
    assert ok


def test_criterion_6_structural_stability(update_runs, record_criterion):
    r = update_runs
    ok = r["structure_changes"] == 0
    record_criterion(6, ok, f"shortcut structure hash changed {r['structure_changes']} times")
    assert ok


@pytest.fixture(scope="module")
def ny():
    t0 = time.perf_counter()
    path = os.environ.get("DHL_NY_GR")
    if path:
        graph, source = read_dimacs(path, os.environ.get("DHL_NY_CO")), path
    else:
        graph, source = ny_scale_graph(seed=0), "synthetic road-like graph"
    t_load = time.perf_counter() - t0
    t0 = time.perf_counter()
    index = HierarchicalIndex.build(graph, seed=0)
    build_s = time.perf_counter() - t0
    return {"index": index, "build_s": build_s, "load_s": t_load, "source": source, "reports": []}


@pytest.mark.slow
def test_criterion_7_double_restore_idempotence(ny, record_criterion):
    t0 = time.perf_counter()
    index = ny["index"]
    g = index.graph
    original = dumps(index)
    wl = x2_restore(g, batches=10, size=1000, seed=7)
    ids = external_to_internal(g)
    for b in range(10):
        for name in (f"batch_{b:02d}_x2", f"batch_{b:02d}_restore"):
            rows = [(ids[u], ids[v], w) for u, v, w in wl.batches[name]]
            start = time.perf_counter()
            rep = apply_batch(index, UpdateBatch(rows), mode="parallel" if b % 2 else "sequential", workers=4)
            ny["reports"].append((time.perf_counter() - start, rep))
    same = dumps(index) == original
    elapsed = time.perf_counter() - t0 + ny["build_s"] + ny["load_s"]
    ok = same and elapsed < 600
    record_criterion(7, ok, f"{ny['source']}: n={g.n}, arcs={2 * g.m}, 10x1000 doubled then restored, "
                            f"bit-identical={same}, {elapsed:.1f}s end-to-end (limit 600s)")
    assert ok


@pytest.mark.slow
def test_criterion_8_performance_report(ny, record_criterion):
    """Informational: printed, never failing."""
    index = ny["index"]
    g = index.graph
    pairs = np.random.default_rng(8).integers(g.n, size=(1_000_000, 2))
    query_many(index, pairs[:10, 0], pairs[:10, 1])
    t0 = time.perf_counter()
    query_many(index, pairs[:, 0], pairs[:, 1])
    query_us = (time.perf_counter() - t0) / len(pairs) * 1e6

    t0 = time.perf_counter()
    hu = build_update_hierarchy(g, index.hq)
    build_labels(index.hq, hu)
    rebuild_s = time.perf_counter() - t0
    if not ny["reports"]:
        rows = [(int(g.edge_u[e]), int(g.edge_v[e]), 2 * int(g.edge_w[e])) for e in range(0, 1000)]
        for batch in (UpdateBatch(rows), None):
            batch = batch or UpdateBatch([(u, v, w // 2) for u, v, w in rows])
            start = time.perf_counter()
            rep = apply_batch(index, batch)
            ny["reports"].append((time.perf_counter() - start, rep))
    batch_s = float(np.mean([s for s, _ in ny["reports"]]))
    mean_ld = float(np.mean([r.L_delta for _, r in ny["reports"]]))
    mb = label_stats(index).bytes / 1e6

    checks = {
        "construction<=60s": ny["build_s"] <= 60,
        "query<=10us": query_us <= 10,
        "batch<reconstruction": batch_s < ny["build_s"],
        "labels within 3x of 130MB": 130 / 3 <= mb <= 390,
    }
    ok = all(checks.values())
    record_criterion(8, ok, f"(informational) construction {ny['build_s']:.1f}s, query {query_us:.3f}us, "
                            f"1000-update batch {batch_s:.3f}s vs reconstruction {ny['build_s']:.1f}s "
                            f"(shortcut+label rebuild alone {rebuild_s:.1f}s) "
                            f"(mean L_delta {mean_ld:.0f}), labels {mb:.1f} MB; "
                            + ", ".join(f"{k}={'ok' if v else 'missed'}" for k, v in checks.items()))


def test_criterion_9_distance_bands(record_criterion):
    rng = np.random.default_rng(909)
    bad = emitted = 0
    for k in range(20):
        n = int(rng.integers(10, 51))
        g = _graph(rng, n, wmin=100, wmax=1000)
        wl = distance_bands(g, l_min=1000, bands=10, per_band=50, seed=k)
        if not wl.params:
            continue
        l_min, l_max = wl.params["l_min"], wl.params["l_max"]
        x = (l_max / l_min) ** (1 / 10)
        ids = external_to_internal(g)
        for i in range(1, 11):
            for s, t, d in wl.pairs[f"band_{i:02d}"]:
                emitted += 1
                true = dijkstra_pair(g, ids[s], ids[t])
                if true != d or not (l_min * x ** (i - 1) < true <= l_min * x ** i):
                    bad += 1
    ok = bad == 0 and emitted > 0
    record_criterion(9, ok, f"{emitted} band pairs on 20 graphs re-checked with Dijkstra, {bad} out of range")
    assert ok
