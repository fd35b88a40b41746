"""Command-line interface: ``dhl build|query|update|workload|verify``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import indexfile, oracle
from .graph import INFINITY, DimacsParseError, Graph, GraphError, read_dimacs
from .indexfile import IndexFormatError
from .labelling import HierarchicalIndex, label_stats, query_many
from .maintenance import apply_batch
from .query_hierarchy import HierarchyError
from .synthetic import ny_scale_graph
from .workload import PROTOCOLS, generate, random_pairs, read_batch, read_pairs

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3
WORKERS_ENV = "DHL_WORKERS"
MAX_REPORTED_MISMATCHES = 10

log = logging.getLogger("dhl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(d: int) -> str:
    return "inf" if d >= INFINITY else str(int(d))


def _load_graph(args) -> Graph:
    if getattr(args, "synthetic", None):
        return ny_scale_graph(seed=args.seed)
    if not args.gr:
        raise UsageError("either --gr or --synthetic is required")
    return read_dimacs(args.gr, args.co)


# --------------------------------------------------------------------------- #
# commands


def cmd_build(args) -> int:
    graph = _load_graph(args)
    t0 = time.perf_counter()
    index = HierarchicalIndex.build(graph, beta=args.beta, leaf_size=args.leaf_size, seed=args.seed,
                                    dataset=args.dataset or (Path(args.gr).name if args.gr else "synthetic-ny"))
    elapsed = time.perf_counter() - t0
    size = indexfile.save(index, args.out)
    stats = label_stats(index)
    print(f"vertices={graph.n} edges={graph.m} merge_conflicts={graph.merge_conflicts}")
    print(f"construction_s={elapsed:.3f} tree_height={index.hq.height} shortcuts={index.hu.num_shortcuts}")
    print(f"label_entries={stats.entries} label_bytes={stats.bytes} max_label={stats.max_length}")
    print(f"index_file={args.out} bytes={size}")
    return EXIT_OK


def cmd_query(args) -> int:
    index = indexfile.load(args.index)
    graph = index.graph
    bad: List = []
    if args.pairs:
        pairs, bad = read_pairs(args.pairs, graph)
        for line, msg in bad:
            print(f"{args.pairs}:{line}: {msg}", file=sys.stderr)
    elif args.random:
        pairs = random_pairs(graph, args.random, seed=args.seed)
    else:
        raise UsageError("either --pairs or --random is required")
    query_many(index, pairs[:1, 0], pairs[:1, 1])  # compile before timing
    t0 = time.perf_counter_ns()
    dist = query_many(index, pairs[:, 0], pairs[:, 1])
    total_ns = time.perf_counter_ns() - t0
    # per-pair timings include one Python call each; the batch mean does not
    sample = pairs[: min(len(pairs), args.timing_samples)]
    lat = np.empty(len(sample))
    for k, (s, t) in enumerate(sample):
        a = time.perf_counter_ns()
        query_many(index, sample[k:k + 1, 0], sample[k:k + 1, 1])
        lat[k] = time.perf_counter_ns() - a
    ext = graph.external_ids
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["s", "t", "distance"])
        for (s, t), d in zip(pairs, dist):
            w.writerow([int(ext[s]), int(ext[t]), _fmt(d)])
    finally:
        if args.out:
            out.close()
    if len(pairs):
        msg = f"pairs={len(pairs)} rejected={len(bad)} mean_us={total_ns / len(pairs) / 1e3:.3f}"
        if len(lat):
            p50, p90, p99 = np.percentile(lat, [50, 90, 99]) / 1e3
            msg += f" call_p50_us={p50:.3f} call_p90_us={p90:.3f} call_p99_us={p99:.3f}"
        print(msg, file=sys.stderr)
    return EXIT_OK if not bad else EXIT_DATA


def _workers(args) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return args.workers


def cmd_update(args) -> int:
    if not args.inplace and not args.out:
        raise UsageError("pass --inplace or --out")
    index = indexfile.load(args.index)
    batch = read_batch(args.batch, index.graph)
    mode = "parallel" if args.mode == "par" else "sequential"
    report = apply_batch(index, batch, mode=mode, workers=_workers(args))
    indexfile.save(index, args.index if args.inplace else args.out)
    row = report.as_row()
    row.update(batch=str(args.batch), updates=len(batch), collapsed=batch.collapsed, mode=args.mode)
    if args.report:
        new = not Path(args.report).exists()
        with open(args.report, "a", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(row))
            if new:
                w.writeheader()
            w.writerow(row)
    print(",".join(f"{k}={v}" for k, v in row.items()))
    return EXIT_OK


def cmd_workload(args) -> int:
    graph = _load_graph(args)
    kw = {}
    if args.protocol in ("x2-restore", "multiplier-sweep"):
        if args.size:
            kw["size"] = args.size
        if args.batches:
            kw["batches"] = args.batches
    elif args.protocol == "distance-bands":
        kw.update(l_min=args.l_min, per_band=args.per_band)
    wl = generate(graph, args.protocol, seed=args.seed, **kw)
    paths = wl.write(args.out)
    for note in wl.notes:
        print(f"note: {note}", file=sys.stderr)
    print(f"wrote {len(paths)} files to {args.out}")
    return EXIT_OK


def _mismatch(kind: str, detail: str, found: List[str]):
    found.append(f"{kind}: {detail}")
    if len(found) <= MAX_REPORTED_MISMATCHES:
        print(f"MISMATCH {kind}: {detail}", file=sys.stderr)


def verify_index(index: HierarchicalIndex, level: str = "query", samples: int = 100, seed: int = 0) -> List[str]:
    """Check the index against the reference oracles; returns mismatch descriptions.

    Sampled levels become exhaustive when ``samples`` covers every label
    entry or shortcut.
    """
    rng = np.random.default_rng(seed)
    graph, hq, hu, lab = index.graph, index.hq, index.hu, index.labels
    n = graph.n
    found: List[str] = []
    full = level == "full"
    if full and n > 2000:
        raise UsageError("level=full is limited to graphs with at most 2000 vertices")

    if level in ("query", "full"):
        if full:
            ss, tt = np.divmod(np.arange(n * n), n)
        else:
            ss, tt = rng.integers(n, size=samples), rng.integers(n, size=samples)
        got = query_many(index, ss, tt)
        if full:
            ref = np.concatenate([oracle.dijkstra(graph, s) for s in range(n)])
        else:
            adj = oracle._adjacency(graph)
            ref = np.array([oracle.bidirectional_dijkstra(graph, int(s), int(t), adj) for s, t in zip(ss, tt)])
        for k in np.flatnonzero(got != ref):
            _mismatch("query", f"s={ss[k]} t={tt[k]} index={_fmt(got[k])} oracle={_fmt(ref[k])}", found)

    if level in ("labels", "full"):
        if full or samples >= len(lab.entries):
            cells = [(v, i) for v in range(n) for i in range(hq.tau[v] + 1)]
        else:
            vs = rng.integers(n, size=samples)
            cells = [(int(v), int(rng.integers(hq.tau[v] + 1))) for v in vs]
        by_anc = {}
        for v, i in cells:
            by_anc.setdefault(hq.ancestor_at(v, i), []).append((v, i))
        for u, group in by_anc.items():
            dist = oracle.induced_subgraph_distances(graph, hq, u)
            for v, i in group:
                e = lab.entry(v, i)
                if e != dist[v]:
                    _mismatch("label", f"v={v} i={i} ancestor={u} index={_fmt(e)} oracle={_fmt(dist[v])}", found)

    if level in ("shortcuts", "full"):
        if full or samples >= hu.num_shortcuts:
            ids = np.arange(hu.num_shortcuts)
        else:
            ids = rng.integers(hu.num_shortcuts, size=samples)
        for s in ids.tolist():
            v, w = int(hu.src[s]), int(hu.up_nbr[s])
            expect = graph.weight(v, w) if graph.edge_id(v, w) >= 0 else INFINITY
            below_v, wv = hu.downward(v)
            for x, wxv in zip(below_v.tolist(), wv.tolist()):
                wxw = hu.shortcut_weight(x, w)
                if wxw is not None:
                    expect = min(expect, wxv + wxw, INFINITY)
            if expect != hu.weight[s]:
                _mismatch("shortcut", f"({v},{w}) index={_fmt(hu.weight[s])} recurrence={_fmt(expect)}", found)
        if full and n <= 12:
            ref = oracle.enumerate_valley_shortcuts(graph, hq)
            have = {k: x for k, x in hu.as_dict().items() if x < INFINITY}
            if ref != have:
                _mismatch("valley", "shortcut set differs from exhaustive enumeration", found)
    return found


def cmd_verify(args) -> int:
    index = indexfile.load(args.index)
    found = verify_index(index, args.level, args.samples, args.seed)
    if found:
        print(f"FAIL {len(found)} mismatches (level={args.level}, samples={args.samples}, seed={args.seed})")
        return EXIT_VERIFY
    print(f"OK level={args.level} samples={args.samples} seed={args.seed}")
    return EXIT_OK


# --------------------------------------------------------------------------- #


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dhl", description="Dynamic exact distance index for road networks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def graph_source(sp):
        sp.add_argument("--gr", help="DIMACS .gr file (optionally gzipped)")
        sp.add_argument("--co", help="DIMACS .co coordinates")
        sp.add_argument("--synthetic", choices=["ny"], help="use the built-in NY-scale generator")
        sp.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("build", help="build and serialize an index")
    graph_source(b)
    b.add_argument("--beta", type=float, default=0.2)
    b.add_argument("--leaf-size", type=int, default=16)
    b.add_argument("--dataset", help="dataset label stored in the metadata")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer distance queries")
    q.add_argument("--index", required=True)
    q.add_argument("--pairs", help="file of 's t' lines (external ids)")
    q.add_argument("--random", type=int, help="number of random pairs")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--timing-samples", type=int, default=10_000)
    q.add_argument("--out", help="CSV output (default stdout)")
    q.set_defaults(func=cmd_query)

    u = sub.add_parser("update", help="apply an update batch")
    u.add_argument("--index", required=True)
    u.add_argument("--batch", required=True)
    u.add_argument("--mode", choices=["seq", "par"], default="seq")
    u.add_argument("--workers", type=int, default=2, help=f"parallel workers (env {WORKERS_ENV} overrides)")
    g = u.add_mutually_exclusive_group()
    g.add_argument("--inplace", action="store_true")
    g.add_argument("--out")
    u.add_argument("--report", help="CSV file to append the maintenance report to")
    u.set_defaults(func=cmd_update)

    w = sub.add_parser("workload", help="generate benchmark workloads")
    graph_source(w)
    w.add_argument("--protocol", choices=PROTOCOLS, required=True)
    w.add_argument("--size", type=int, help="updates per batch")
    w.add_argument("--batches", type=int)
    w.add_argument("--l-min", type=float, default=1000.0)
    w.add_argument("--per-band", type=int, default=10_000)
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_workload)

    v = sub.add_parser("verify", help="check an index against reference oracles")
    v.add_argument("--index", required=True)
    v.add_argument("--samples", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--level", choices=["query", "labels", "shortcuts", "full"], default="query")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dhl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DimacsParseError, GraphError, HierarchyError, IndexFormatError, OSError) as exc:
        print(f"dhl: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
