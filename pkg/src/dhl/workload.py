"""Deterministic benchmark workloads: update batches and query pair sets.

Batch files hold one ``u v new_weight`` line per update and pair files one
``s t`` (or ``s t distance``) line per pair, always with external vertex ids.
Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as sp_dijkstra

from .graph import INFINITY, Graph, GraphError, UpdateBatch, WeightUpdate

log = logging.getLogger(__name__)

PROTOCOLS = ("x2-restore", "multiplier-sweep", "distance-bands", "scalability")
SCALABILITY_SIZES = tuple(range(500, 5001, 500))


@dataclass
class Workload:
    """Named update batches and pair sets, in emission order."""

    batches: Dict[str, List[Tuple[int, int, int]]] = field(default_factory=dict)
    pairs: Dict[str, List[Tuple[int, ...]]] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    params: Dict[str, float] = field(default_factory=dict)

    def write(self, out_dir) -> List[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, rows in list(self.batches.items()) + list(self.pairs.items()):
            path = out / f"{name}.txt"
            path.write_text("".join(" ".join(str(x) for x in r) + "\n" for r in rows))
            written.append(path)
        return written


def _finite_edges(graph: Graph) -> np.ndarray:
    return np.flatnonzero(graph.edge_w < INFINITY)


def _sample_edges(graph: Graph, size: int, rng: np.random.Generator) -> np.ndarray:
    pool = _finite_edges(graph)
    if size > len(pool):
        raise GraphError(f"cannot sample {size} distinct edges from {len(pool)}")
    return np.sort(rng.choice(pool, size=size, replace=False))


def _rows(graph: Graph, eids: np.ndarray, weights: np.ndarray) -> List[Tuple[int, int, int]]:
    ext = graph.external_ids
    return [(int(ext[graph.edge_u[e]]), int(ext[graph.edge_v[e]]), int(w)) for e, w in zip(eids, weights)]


def x2_restore(graph: Graph, batches: int = 10, size: int = 1000, seed: int = 0) -> Workload:
    """Each batch doubles ``size`` random edge weights; its partner restores them."""
    rng = np.random.default_rng(seed)
    wl = Workload()
    for b in range(batches):
        eids = _sample_edges(graph, size, rng)
        w = graph.edge_w[eids]
        wl.batches[f"batch_{b:02d}_x2"] = _rows(graph, eids, 2 * w)
        wl.batches[f"batch_{b:02d}_restore"] = _rows(graph, eids, w)
    return wl


def multiplier_sweep(graph: Graph, batches: int = 9, size: int = 1000, seed: int = 0) -> Workload:
    """Batch ``t`` (1-based) scales its edges to ``(t + 1) * w``, then restores."""
    rng = np.random.default_rng(seed)
    wl = Workload()
    for t in range(1, batches + 1):
        eids = _sample_edges(graph, size, rng)
        w = graph.edge_w[eids]
        wl.batches[f"sweep_{t:02d}_x{t + 1}"] = _rows(graph, eids, (t + 1) * w)
        wl.batches[f"sweep_{t:02d}_restore"] = _rows(graph, eids, w)
    return wl


def scalability(graph: Graph, sizes: Sequence[int] = SCALABILITY_SIZES, seed: int = 0) -> Workload:
    """Prefixes of one pool of doubling updates, one batch (plus restore) per size."""
    rng = np.random.default_rng(seed)
    total = max(sizes)
    eids = _sample_edges(graph, total, rng)
    eids = eids[rng.permutation(total)]
    w = graph.edge_w[eids]
    wl = Workload()
    for s in sizes:
        wl.batches[f"scale_{s:05d}"] = _rows(graph, eids[:s], 2 * w[:s])
        wl.batches[f"scale_{s:05d}_restore"] = _rows(graph, eids[:s], w[:s])
    return wl


def _csr(graph: Graph) -> csr_matrix:
    finite = graph.edge_w < INFINITY
    u, v, w = graph.edge_u[finite], graph.edge_v[finite], graph.edge_w[finite].astype(np.float64)
    # csgraph treats explicit zeros as missing edges; nudge them below any real weight
    w = np.where(w == 0, 1e-9, w)
    return csr_matrix((np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
                      shape=(graph.n, graph.n))


def sssp(graph: Graph, sources, mat: Optional[csr_matrix] = None) -> np.ndarray:
    """Distance rows for ``sources`` as int64, unreachable = ``INFINITY``."""
    mat = _csr(graph) if mat is None else mat
    d = sp_dijkstra(mat, directed=False, indices=np.asarray(sources))
    out = np.full(d.shape, INFINITY, dtype=np.int64)
    finite = np.isfinite(d)
    out[finite] = np.rint(d[finite]).astype(np.int64)
    return out


def band_edges(l_min: float, l_max: float, bands: int = 10) -> np.ndarray:
    """Boundaries ``l_min * x**i`` for ``i = 0..bands`` with ``x = (l_max / l_min)**(1 / bands)``."""
    x = (l_max / l_min) ** (1.0 / bands)
    return np.array([l_min * x ** i for i in range(bands + 1)])


def in_band(d: int, edges: np.ndarray, i: int) -> bool:
    """Band ``i`` is 1-based: ``edges[i-1] < d <= edges[i]``."""
    return edges[i - 1] < d <= edges[i]


def distance_bands(graph: Graph, l_min: float = 1000.0, bands: int = 10, per_band: int = 10_000,
                   seed: int = 0, probe_sources: int = 16, max_sources: Optional[int] = None) -> Workload:
    """Pairs grouped by distance band; short bands are emitted with a warning."""
    rng = np.random.default_rng(seed)
    mat = _csr(graph)
    probes = sssp(graph, rng.choice(graph.n, size=min(probe_sources, graph.n), replace=False), mat)
    finite = probes[probes < INFINITY]
    l_max = float(finite.max()) if finite.size else 0.0
    wl = Workload()
    if l_max <= l_min:
        wl.notes.append(f"largest sampled distance {l_max:g} does not exceed l_min={l_min:g}; bands are empty")
        for i in range(1, bands + 1):
            wl.pairs[f"band_{i:02d}"] = []
        log.warning(wl.notes[-1])
        return wl
    edges = band_edges(l_min, l_max, bands)
    found: List[List[Tuple[int, int, int]]] = [[] for _ in range(bands)]
    ext = graph.external_ids
    budget = max_sources if max_sources is not None else max(4 * per_band, 64)
    order = rng.permutation(graph.n)
    used = 0
    while used < min(budget, graph.n) and any(len(f) < per_band for f in found):
        chunk = order[used:used + 32]
        used += len(chunk)
        rows = sssp(graph, chunk, mat)
        for s, dist in zip(chunk.tolist(), rows):
            band = np.searchsorted(edges, dist, side="left")  # edges[band-1] < d <= edges[band]
            ok = (dist < INFINITY) & (band >= 1) & (band <= bands)
            for i in range(1, bands + 1):
                need = per_band - len(found[i - 1])
                if need <= 0:
                    continue
                targets = np.flatnonzero(ok & (band == i))
                if not len(targets):
                    continue
                take = rng.choice(targets, size=min(need, len(targets), 8), replace=False)
                found[i - 1] += [(int(ext[s]), int(ext[t]), int(dist[t])) for t in np.sort(take)]
    for i in range(1, bands + 1):
        wl.pairs[f"band_{i:02d}"] = found[i - 1]
        if len(found[i - 1]) < per_band:
            msg = f"band {i} has {len(found[i - 1])} of {per_band} pairs"
            wl.notes.append(msg)
            log.warning(msg)
    wl.params.update(l_min=float(l_min), l_max=l_max, x=float(edges[1] / edges[0]), bands=bands)
    wl.notes.append(f"l_min={l_min:g} l_max={l_max:g} x={edges[1] / edges[0]:.6f}")
    return wl


def random_pairs(graph: Graph, count: int, seed: int = 0) -> np.ndarray:
    """``count`` random (s, t) internal-id pairs."""
    rng = np.random.default_rng(seed)
    return rng.integers(graph.n, size=(count, 2))


def generate(graph: Graph, protocol: str, seed: int = 0, **kw) -> Workload:
    if protocol == "x2-restore":
        return x2_restore(graph, seed=seed, **kw)
    if protocol == "multiplier-sweep":
        return multiplier_sweep(graph, seed=seed, **kw)
    if protocol == "distance-bands":
        return distance_bands(graph, seed=seed, **kw)
    if protocol == "scalability":
        return scalability(graph, seed=seed, **kw)
    raise ValueError(f"unknown protocol {protocol!r}; choose from {', '.join(PROTOCOLS)}")


# --------------------------------------------------------------------------- #
# file readers


def _data_lines(text: str):
    for k, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if line and not line.startswith("#"):
            yield k, line.split()


def external_to_internal(graph: Graph) -> Dict[int, int]:
    return {int(x): i for i, x in enumerate(graph.external_ids.tolist())}


def read_batch(path, graph: Graph) -> UpdateBatch:
    """Parse a batch file; raises ``GraphError`` naming the first bad line."""
    remap = external_to_internal(graph)
    ups = []
    for k, parts in _data_lines(Path(path).read_text()):
        if len(parts) != 3:
            raise GraphError(f"{path}:{k}: expected 'u v new_weight'")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = INFINITY if parts[2].lower() in ("inf", "infinity") else int(parts[2])
        except ValueError:
            raise GraphError(f"{path}:{k}: non-integer field") from None
        if u not in remap or v not in remap:
            raise GraphError(f"{path}:{k}: unknown vertex id")
        ups.append(WeightUpdate(remap[u], remap[v], min(w, INFINITY)))
    return UpdateBatch(ups)


def read_pairs(path, graph: Graph) -> Tuple[np.ndarray, List[Tuple[int, str]]]:
    """Internal-id pairs plus ``(line, message)`` for every rejected line."""
    remap = external_to_internal(graph)
    pairs, bad = [], []
    for k, parts in _data_lines(Path(path).read_text()):
        try:
            s, t = int(parts[0]), int(parts[1])
        except (ValueError, IndexError):
            bad.append((k, "malformed pair"))
            continue
        if s not in remap or t not in remap:
            bad.append((k, f"unknown vertex id in pair {s} {t}"))
            continue
        pairs.append((remap[s], remap[t]))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2), bad
