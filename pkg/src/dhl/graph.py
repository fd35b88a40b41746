"""Road-network graph, DIMACS ingestion and the edge-weight update model."""

from __future__ import annotations

import gzip
import io
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Optional, Sequence, Union

import numpy as np

#: Distance sentinel. Strictly above any path length accepted at load time,
#: and small enough that INFINITY + INFINITY still fits in int64.
INFINITY = 1 << 61

DIST_DTYPE = np.int64
VERTEX_DTYPE = np.int32

Source = Union[bytes, str, os.PathLike, BinaryIO]


def sat_add(a: int, b: int) -> int:
    s = a + b
    return INFINITY if s > INFINITY else s


class GraphError(ValueError):
    """Raised for invalid graph operations (unknown edge, bad weight, ...)."""


class DimacsParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(eq=False)
class Graph:
    """Undirected weighted graph with mutable integer edge weights.

    Edges are stored once, as ``edge_u[e] < edge_v[e]``. The CSR arrays
    (``indptr``, ``adj``, ``adj_edge``) list every edge in both directions
    with neighbours sorted ascending, so ``edge_id`` is a binary search.
    """

    n: int
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_w: np.ndarray
    coords: Optional[np.ndarray] = None
    coord_missing: Optional[np.ndarray] = None
    external_ids: Optional[np.ndarray] = None
    merge_conflicts: int = 0
    self_loops: int = 0
    indptr: np.ndarray = field(init=False, repr=False)
    adj: np.ndarray = field(init=False, repr=False)
    adj_edge: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.edge_u = np.ascontiguousarray(self.edge_u, dtype=VERTEX_DTYPE)
        self.edge_v = np.ascontiguousarray(self.edge_v, dtype=VERTEX_DTYPE)
        self.edge_w = np.ascontiguousarray(self.edge_w, dtype=DIST_DTYPE)
        if self.external_ids is None:
            self.external_ids = np.arange(1, self.n + 1, dtype=np.int64)
        self._build_csr()

    def _build_csr(self):
        m = len(self.edge_u)
        src = np.concatenate([self.edge_u, self.edge_v])
        dst = np.concatenate([self.edge_v, self.edge_u])
        eid = np.concatenate([np.arange(m), np.arange(m)]).astype(np.int64)
        order = np.lexsort((dst, src))
        self.adj = np.ascontiguousarray(dst[order], dtype=VERTEX_DTYPE)
        self.adj_edge = np.ascontiguousarray(eid[order])
        counts = np.bincount(src, minlength=self.n)
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Union[np.ndarray, Sequence[Sequence[int]]],
        coords: Optional[np.ndarray] = None,
        coord_missing: Optional[np.ndarray] = None,
        external_ids: Optional[np.ndarray] = None,
    ) -> "Graph":
        """Build from 0-based ``(u, v, w)`` rows.

        Self-loops are dropped and parallel edges collapse to their minimum
        weight; every collapsed arc whose weight differs from that minimum
        counts as one merge conflict.
        """
        if n <= 0:
            raise GraphError("graph must have at least one vertex")
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 3)
        u, v, w = arr[:, 0], arr[:, 1], arr[:, 2]
        if len(arr) and (u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n):
            raise GraphError(f"edge endpoint outside [0, {n})")
        if len(arr) and w.min() < 0:
            raise GraphError("negative edge weight")
        loops = u == v
        n_loops = int(loops.sum())
        u, v, w = u[~loops], v[~loops], w[~loops]
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        order = np.lexsort((w, hi, lo))
        lo, hi, w = lo[order], hi[order], w[order]
        first = np.ones(len(lo), dtype=bool)
        first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
        group = np.cumsum(first) - 1
        min_w = w[first]
        conflicts = int((w != min_w[group]).sum())
        if not _weight_sum_ok(min_w):
            raise GraphError("sum of edge weights reaches INFINITY")
        return cls(
            n=n,
            edge_u=lo[first],
            edge_v=hi[first],
            edge_w=min_w,
            coords=coords,
            coord_missing=coord_missing,
            external_ids=external_ids,
            merge_conflicts=conflicts,
            self_loops=n_loops,
        )

    @property
    def m(self) -> int:
        return len(self.edge_u)

    def edge_id(self, u: int, v: int) -> int:
        """Index of edge ``{u, v}`` or -1."""
        if not (0 <= u < self.n and 0 <= v < self.n):
            return -1
        lo, hi = self.indptr[u], self.indptr[u + 1]
        k = lo + np.searchsorted(self.adj[lo:hi], v)
        if k < hi and self.adj[k] == v:
            return int(self.adj_edge[k])
        return -1

    def weight(self, u: int, v: int) -> int:
        e = self.edge_id(u, v)
        if e < 0:
            raise GraphError(f"no edge ({u}, {v})")
        return int(self.edge_w[e])

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.adj[lo:hi], self.edge_w[self.adj_edge[lo:hi]]

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> Iterable[tuple[int, int, int]]:
        for u, v, w in zip(self.edge_u.tolist(), self.edge_v.tolist(), self.edge_w.tolist()):
            yield u, v, w

    def copy(self) -> "Graph":
        g = Graph.__new__(Graph)
        g.__dict__.update(self.__dict__)
        g.edge_w = self.edge_w.copy()
        return g

    def check_symmetric(self) -> bool:
        """Full scan: every arc (u, v, w) has its twin (v, u, w)."""
        src = np.repeat(np.arange(self.n), np.diff(self.indptr))
        w = self.edge_w[self.adj_edge]
        fwd = set(zip(src.tolist(), self.adj.tolist(), w.tolist()))
        return all((v, u, x) in fwd for u, v, x in fwd) and not any(u == v for u, v, _ in fwd)

    def has_coordinates(self) -> bool:
        return self.coords is not None


@dataclass
class CoordinateTable:
    xy: np.ndarray
    missing: np.ndarray

    @property
    def n_missing(self) -> int:
        return int(self.missing.sum())


# --------------------------------------------------------------------------- #
# DIMACS readers


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, str) and not os.path.exists(source):
        data = source.encode()
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
        if isinstance(data, str):
            data = data.encode()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def _split_lines(data: bytes) -> list[bytes]:
    # single-line inputs may separate records with '/'
    if b"\n" not in data and b"/" in data:
        return data.split(b"/")
    return data.splitlines()


def _weight_sum_ok(w: np.ndarray) -> bool:
    finite = w[w < INFINITY]
    if float(finite.sum(dtype=np.float64)) < INFINITY / 2:
        return True
    return sum(int(x) for x in finite) < INFINITY


def parse_dimacs_gr(source: Source) -> Graph:
    """Parse a DIMACS shortest-path ``.gr`` file into an undirected Graph.

    Arcs ``(u, v)`` and ``(v, u)`` merge into one edge; see
    :meth:`Graph.from_edges` for the parallel-edge rule.
    """
    data = _read_bytes(source)
    n = m = None
    rows: list[bytes] = []
    line_no: list[int] = []
    for k, raw in enumerate(_split_lines(data), start=1):
        line = raw.strip()
        if not line or line[:1] == b"c":
            continue
        tag = line[:1]
        if tag == b"p":
            parts = line.split()
            if n is not None:
                raise DimacsParseError("duplicate problem line", k)
            if len(parts) != 4 or parts[1] != b"sp":
                raise DimacsParseError("expected 'p sp <n> <m>'", k)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsParseError("non-integer problem sizes", k) from None
        elif tag == b"a":
            if n is None:
                raise DimacsParseError("arc before problem line", k)
            rows.append(line[1:])
            line_no.append(k)
        else:
            raise DimacsParseError(f"unrecognised line {raw[:40]!r}", k)
    if n is None:
        raise DimacsParseError("missing problem line")
    if n <= 0:
        raise DimacsParseError("problem line declares no vertices")
    try:
        arcs = np.array(b" ".join(rows).split(), dtype=np.int64)
    except (ValueError, OverflowError):
        arcs = None
    if arcs is None or arcs.size != 3 * len(rows):
        for row, k in zip(rows, line_no):
            parts = row.split()
            if len(parts) != 3 or not all(p.lstrip(b"-").isdigit() for p in parts):
                raise DimacsParseError("malformed arc line", k)
        raise DimacsParseError("malformed arc line")
    arcs = arcs.reshape(-1, 3)
    bad = np.flatnonzero((arcs[:, 0] < 1) | (arcs[:, 0] > n) | (arcs[:, 1] < 1) | (arcs[:, 1] > n))
    if bad.size:
        r = arcs[bad[0]]
        raise DimacsParseError(f"vertex id outside [1, {n}] in arc {r[0]} {r[1]}", line_no[bad[0]])
    neg = np.flatnonzero(arcs[:, 2] < 0)
    if neg.size:
        raise DimacsParseError("negative weight", line_no[neg[0]])
    if len(arcs) != m:
        raise DimacsParseError(f"problem line declares {m} arcs, found {len(arcs)}")
    arcs[:, :2] -= 1
    try:
        return Graph.from_edges(n, arcs)
    except GraphError as exc:
        raise DimacsParseError(str(exc)) from None


def parse_dimacs_co(source: Source, n: Optional[int] = None) -> CoordinateTable:
    """Parse a DIMACS ``.co`` coordinate file.

    ``n`` defaults to the ``p aux sp co <n>`` line, then to the largest id.
    Vertices without a ``v`` line are flagged in ``missing``.
    """
    data = _read_bytes(source)
    ids, xs, ys, line_no = [], [], [], []
    declared = None
    for k, raw in enumerate(_split_lines(data), start=1):
        line = raw.strip()
        if not line or line[:1] == b"c":
            continue
        parts = line.split()
        if parts[0] == b"p":
            try:
                declared = int(parts[-1])
            except ValueError:
                raise DimacsParseError("bad problem line", k) from None
        elif parts[0] == b"v" and len(parts) == 4:
            try:
                ids.append(int(parts[1]))
                xs.append(int(parts[2]))
                ys.append(int(parts[3]))
            except ValueError:
                raise DimacsParseError("non-integer coordinate line", k) from None
            line_no.append(k)
        else:
            raise DimacsParseError(f"unrecognised line {raw[:40]!r}", k)
    if n is None:
        n = declared if declared is not None else (max(ids) if ids else 0)
    xy = np.zeros((n, 2), dtype=np.int64)
    missing = np.ones(n, dtype=bool)
    for i, x, y, k in zip(ids, xs, ys, line_no):
        if not 1 <= i <= n:
            raise DimacsParseError(f"vertex id {i} outside [1, {n}]", k)
        if not missing[i - 1]:
            raise DimacsParseError(f"duplicate coordinates for vertex {i}", k)
        missing[i - 1] = False
        xy[i - 1] = (x, y)
    return CoordinateTable(xy, missing)


def read_dimacs(gr: Source, co: Optional[Source] = None) -> Graph:
    g = parse_dimacs_gr(gr)
    if co is not None:
        table = parse_dimacs_co(co, n=g.n)
        g.coords, g.coord_missing = table.xy, table.missing
    return g


def write_dimacs_gr(graph: Graph, out: Union[str, os.PathLike, BinaryIO], comment: str = "") -> None:
    """Write both arcs of every edge, 1-based, in the DIMACS ``.gr`` layout."""
    buf = io.StringIO()
    if comment:
        buf.write(f"c {comment}\n")
    buf.write(f"p sp {graph.n} {2 * graph.m}\n")
    u = graph.edge_u.astype(np.int64) + 1
    v = graph.edge_v.astype(np.int64) + 1
    arcs = np.empty((2 * graph.m, 3), dtype=np.int64)
    arcs[0::2] = np.column_stack([u, v, graph.edge_w])
    arcs[1::2] = np.column_stack([v, u, graph.edge_w])
    np.savetxt(buf, arcs, fmt="a %d %d %d")
    _write_text(buf.getvalue(), out)


def write_dimacs_co(graph: Graph, out: Union[str, os.PathLike, BinaryIO]) -> None:
    if graph.coords is None:
        raise GraphError("graph has no coordinates")
    buf = io.StringIO()
    buf.write(f"p aux sp co {graph.n}\n")
    keep = np.flatnonzero(~graph.coord_missing) if graph.coord_missing is not None else np.arange(graph.n)
    rows = np.column_stack([keep + 1, graph.coords[keep]])
    np.savetxt(buf, rows, fmt="v %d %d %d")
    _write_text(buf.getvalue(), out)


def _write_text(text: str, out) -> None:
    if isinstance(out, (str, os.PathLike)):
        opener = gzip.open if str(out).endswith(".gz") else open
        with opener(out, "wt") as fh:
            fh.write(text)
    else:
        out.write(text.encode())


# --------------------------------------------------------------------------- #
# weight updates


@dataclass
class WeightUpdate:
    u: int
    v: int
    new_weight: int
    old_weight: Optional[int] = None

    @property
    def key(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


class UpdateBatch:
    """Edge-weight changes, at most one per edge (last writer wins).

    ``collapsed`` counts updates discarded by the collapse. After
    :func:`classify_batch` or :func:`apply_batch_weights` the
    ``increases``/``decreases`` lists hold the effective changes with old
    weights filled in; no-ops are dropped and counted in ``noops``.
    """

    def __init__(self, updates: Iterable[Union[WeightUpdate, Sequence[int]]] = ()):
        latest: dict[tuple[int, int], WeightUpdate] = {}
        total = 0
        for up in updates:
            if not isinstance(up, WeightUpdate):
                up = WeightUpdate(int(up[0]), int(up[1]), int(up[2]))
            if up.new_weight < 0:
                raise GraphError(f"negative weight for ({up.u}, {up.v})")
            total += 1
            latest.pop(up.key, None)
            latest[up.key] = up
        self.updates: list[WeightUpdate] = list(latest.values())
        self.collapsed = total - len(self.updates)
        self.increases: list[WeightUpdate] = []
        self.decreases: list[WeightUpdate] = []
        self.noops = 0
        self.classified = False

    def __len__(self) -> int:
        return len(self.updates)

    def __iter__(self):
        return iter(self.updates)

    def __repr__(self) -> str:
        return (f"UpdateBatch({len(self.updates)} updates, {len(self.increases)} inc, "
                f"{len(self.decreases)} dec, collapsed={self.collapsed})")

    def inverse(self) -> "UpdateBatch":
        """Batch restoring the recorded old weights."""
        if not self.classified:
            raise GraphError("batch has not been applied; old weights unknown")
        return UpdateBatch(WeightUpdate(up.u, up.v, up.old_weight) for up in self.increases + self.decreases)


def _lookup_edges(graph: Graph, updates: Sequence[WeightUpdate]) -> np.ndarray:
    eids = np.empty(len(updates), dtype=np.int64)
    for k, up in enumerate(updates):
        e = graph.edge_id(up.u, up.v)
        if e < 0:
            raise GraphError(f"update references non-edge ({up.u}, {up.v})")
        eids[k] = e
    return eids


def classify_batch(graph: Graph, batch: UpdateBatch) -> tuple[UpdateBatch, UpdateBatch]:
    """Split into (increase, decrease) sub-batches without mutating ``graph``.

    Validates every edge first, so a bad update rejects the whole batch.
    """
    _lookup_edges(graph, batch.updates)
    inc, dec = UpdateBatch(), UpdateBatch()
    batch.increases, batch.decreases, batch.noops = [], [], 0
    for up in batch.updates:
        old = graph.weight(up.u, up.v)
        rec = WeightUpdate(up.u, up.v, up.new_weight, old)
        if up.new_weight > old:
            batch.increases.append(rec)
        elif up.new_weight < old:
            batch.decreases.append(rec)
        else:
            batch.noops += 1
    batch.classified = True
    inc.updates = inc.increases = list(batch.increases)
    dec.updates = dec.decreases = list(batch.decreases)
    inc.classified = dec.classified = True
    return inc, dec


def apply_batch_weights(graph: Graph, batch: UpdateBatch) -> UpdateBatch:
    """Write the batch into ``graph`` atomically and record old weights.

    Returns ``batch`` itself, now classified.
    """
    eids = _lookup_edges(graph, batch.updates)
    classify_batch(graph, batch)
    new = np.array([min(up.new_weight, INFINITY) for up in batch.updates], dtype=np.int64)
    trial = graph.edge_w.copy()
    trial[eids] = new
    if not _weight_sum_ok(trial):
        raise GraphError("sum of finite edge weights reaches INFINITY")
    graph.edge_w[eids] = new
    return batch


def update_arrays(graph: Graph, updates: Sequence[WeightUpdate]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(edge ids, old weights, new weights) arrays for kernel consumption."""
    eids = _lookup_edges(graph, updates)
    old = np.array([up.old_weight if up.old_weight is not None else -1 for up in updates], dtype=np.int64)
    new = np.array([min(up.new_weight, INFINITY) for up in updates], dtype=np.int64)
    return eids, old, new
