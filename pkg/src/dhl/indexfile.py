"""Binary index file.

Layout (all integers little-endian)::

    b"DHL1"  u16 version  u16 section count
    per section: 4-byte tag, u64 payload length, payload, u32 CRC32(payload)

A payload is a sequence of named arrays, each written as
``u16 name length, name, u8 dtype code, u8 ndim, u64 shape..., raw bytes``.
The metadata section is UTF-8 JSON with sorted keys.
"""

from __future__ import annotations

import io
import json
import os
import struct
import zlib
from typing import BinaryIO, Dict, Union

import numpy as np

from .graph import Graph
from .labelling import HierarchicalIndex, Labelling
from .query_hierarchy import HierarchyError, QueryHierarchy
from .update_hierarchy import UpdateHierarchy

MAGIC = b"DHL1"
VERSION = 1

_DTYPES = {1: "<i4", 2: "<i8", 3: "<u8", 4: "<f8", 5: "|u1", 6: "|b1"}
_CODES = {np.dtype(v).str: k for k, v in _DTYPES.items()}


class IndexFormatError(ValueError):
    """Malformed, corrupted or incompatible index file."""


def _pack_arrays(arrays: Dict[str, np.ndarray]) -> bytes:
    out = io.BytesIO()
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        code = _CODES.get(arr.dtype.newbyteorder("<").str)
        if code is None:
            raise TypeError(f"unsupported dtype {arr.dtype} for {name}")
        raw = np.ascontiguousarray(arr, dtype=_DTYPES[code])
        key = name.encode()
        out.write(struct.pack("<H", len(key)) + key + struct.pack("<BB", code, raw.ndim))
        out.write(struct.pack(f"<{raw.ndim}Q", *raw.shape))
        out.write(raw.tobytes())
    return out.getvalue()


def _unpack_arrays(payload: bytes) -> Dict[str, np.ndarray]:
    arrays = {}
    pos = 0
    try:
        while pos < len(payload):
            (klen,) = struct.unpack_from("<H", payload, pos)
            pos += 2
            name = payload[pos:pos + klen].decode()
            pos += klen
            code, ndim = struct.unpack_from("<BB", payload, pos)
            pos += 2
            shape = struct.unpack_from(f"<{ndim}Q", payload, pos)
            pos += 8 * ndim
            dt = np.dtype(_DTYPES[code])
            count = int(np.prod(shape)) if ndim else 1
            nbytes = count * dt.itemsize
            if pos + nbytes > len(payload):
                raise IndexFormatError(f"array {name!r} overruns its section")
            arrays[name] = np.frombuffer(payload, dtype=dt, count=count, offset=pos).reshape(shape).copy()
            pos += nbytes
    except (struct.error, KeyError, UnicodeDecodeError) as exc:
        raise IndexFormatError(f"malformed section payload: {exc}") from None
    return arrays


def _graph_arrays(g: Graph) -> Dict[str, np.ndarray]:
    arrays = {
        "n": np.array([g.n], dtype=np.int64),
        "edge_u": g.edge_u, "edge_v": g.edge_v, "edge_w": g.edge_w,
        "external_ids": g.external_ids.astype(np.int64),
        "counters": np.array([g.merge_conflicts, g.self_loops], dtype=np.int64),
    }
    if g.coords is not None:
        arrays["coords"] = np.asarray(g.coords)
        missing = g.coord_missing if g.coord_missing is not None else np.zeros(g.n, dtype=bool)
        arrays["coord_missing"] = np.asarray(missing, dtype=bool)
    return arrays


def _hq_arrays(hq: QueryHierarchy) -> Dict[str, np.ndarray]:
    return {
        "beta": np.array([hq.beta], dtype=np.float64),
        "node_bits": hq.node_bits, "node_depth": hq.node_depth, "node_parent": hq.node_parent,
        "member_ptr": hq.member_ptr, "members": hq.members,
    }


def _hu_arrays(hu: UpdateHierarchy) -> Dict[str, np.ndarray]:
    return {"up_ptr": hu.up_ptr, "up_nbr": hu.up_nbr, "weight": hu.weight}


def _labels_arrays(lab: Labelling) -> Dict[str, np.ndarray]:
    return {"off": lab.off, "entries": lab.entries}


def dumps(index: HierarchicalIndex) -> bytes:
    """Serialize ``index``; equal indexes give equal bytes."""
    sections = [
        (b"GRPH", _pack_arrays(_graph_arrays(index.graph))),
        (b"HQTR", _pack_arrays(_hq_arrays(index.hq))),
        (b"HUSC", _pack_arrays(_hu_arrays(index.hu))),
        (b"LABL", _pack_arrays(_labels_arrays(index.labels))),
        (b"META", json.dumps(index.meta, sort_keys=True, default=str).encode()),
    ]
    out = io.BytesIO()
    out.write(MAGIC + struct.pack("<HH", VERSION, len(sections)))
    for tag, payload in sections:
        out.write(tag + struct.pack("<Q", len(payload)))
        out.write(payload)
        out.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))
    return out.getvalue()


def loads(data: bytes) -> HierarchicalIndex:
    if data[:4] != MAGIC:
        raise IndexFormatError("not an index file (bad magic)")
    if len(data) < 8:
        raise IndexFormatError("truncated header")
    version, count = struct.unpack_from("<HH", data, 4)
    if version != VERSION:
        raise IndexFormatError(f"unsupported format version {version} (expected {VERSION})")
    pos = 8
    sections = {}
    for _ in range(count):
        if pos + 12 > len(data):
            raise IndexFormatError("truncated section header")
        tag = data[pos:pos + 4]
        (length,) = struct.unpack_from("<Q", data, pos + 4)
        pos += 12
        if pos + length + 4 > len(data):
            raise IndexFormatError(f"truncated section {tag!r}")
        payload = data[pos:pos + length]
        (crc,) = struct.unpack_from("<I", data, pos + length)
        if zlib.crc32(payload) & 0xFFFFFFFF != crc:
            raise IndexFormatError(f"CRC mismatch in section {tag.decode(errors='replace')}")
        sections[tag] = payload
        pos += length + 4
    if pos != len(data):
        raise IndexFormatError("trailing bytes after the last section")
    missing = {b"GRPH", b"HQTR", b"HUSC", b"LABL", b"META"} - set(sections)
    if missing:
        raise IndexFormatError(f"missing sections {sorted(t.decode() for t in missing)}")

    try:
        return _assemble(sections)
    except IndexFormatError:
        raise
    except (KeyError, IndexError, ValueError) as exc:
        raise IndexFormatError(f"inconsistent index contents: {exc!r}") from None


def _assemble(sections) -> HierarchicalIndex:
    ga = _unpack_arrays(sections[b"GRPH"])
    n = int(ga["n"][0])
    graph = Graph(n, ga["edge_u"], ga["edge_v"], ga["edge_w"], coords=ga.get("coords"),
                  coord_missing=ga.get("coord_missing"), external_ids=ga["external_ids"],
                  merge_conflicts=int(ga["counters"][0]), self_loops=int(ga["counters"][1]))
    qa = _unpack_arrays(sections[b"HQTR"])
    sizes = np.diff(qa["member_ptr"])
    mem = np.split(qa["members"], np.cumsum(sizes)[:-1]) if len(sizes) else []
    hq = QueryHierarchy._assemble(n, qa["node_bits"], qa["node_depth"], qa["node_parent"],
                                  [m.tolist() for m in mem], float(qa["beta"][0]))
    ua = _unpack_arrays(sections[b"HUSC"])
    hu = _restore_hu(graph, hq, ua)
    la = _unpack_arrays(sections[b"LABL"])
    labels = Labelling(la["off"], la["entries"])
    try:
        meta = json.loads(sections[b"META"].decode())
    except ValueError as exc:
        raise IndexFormatError(f"bad metadata: {exc}") from None
    return HierarchicalIndex(graph, hq, hu, labels, meta)


def _restore_hu(graph: Graph, hq: QueryHierarchy, ua) -> UpdateHierarchy:
    m = len(ua["up_nbr"])
    hu = UpdateHierarchy(graph.n, hq.tau, ua["up_ptr"], ua["up_nbr"], ua["weight"],
                         np.full(m, -1, dtype=np.int64), np.empty(graph.m, dtype=np.int64))
    try:
        hu.attach_edges(graph)
    except HierarchyError as exc:
        raise IndexFormatError(str(exc)) from None
    return hu


def save(index: HierarchicalIndex, path: Union[str, os.PathLike, BinaryIO]) -> int:
    data = dumps(index)
    if hasattr(path, "write"):
        path.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)
    return len(data)


def load(path: Union[str, os.PathLike, BinaryIO]) -> HierarchicalIndex:
    if hasattr(path, "read"):
        return loads(path.read())
    with open(path, "rb") as fh:
        return loads(fh.read())
