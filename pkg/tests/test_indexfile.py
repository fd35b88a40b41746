import io
import struct
import zlib

import numpy as np
import pytest

from dhl import indexfile
from dhl.graph import UpdateBatch
from dhl.indexfile import IndexFormatError, dumps, loads
from dhl.labelling import HierarchicalIndex, query_many
from dhl.maintenance import apply_batch

from fixtures import paper_graph, paper_hierarchy, random_connected


def _index(seed=0, n=120):
    g = random_connected(np.random.default_rng(seed), n, coords=True)
    return HierarchicalIndex.build(g, leaf_size=4, seed=seed, dataset="random")


def test_round_trip_is_bit_identical():
    idx = _index()
    data = dumps(idx)
    back = loads(data)
    assert dumps(back) == data
    assert back.meta == idx.meta
    ss, tt = np.arange(120), np.arange(120)[::-1]
    assert np.array_equal(query_many(back, ss, tt), query_many(idx, ss, tt))
    assert back.hu.structure_hash() == idx.hu.structure_hash()


def test_round_trip_through_file(tmp_path):
    idx = HierarchicalIndex.build(paper_graph(), hq=paper_hierarchy())
    size = indexfile.save(idx, tmp_path / "p.idx")
    assert size == (tmp_path / "p.idx").stat().st_size
    assert dumps(indexfile.load(tmp_path / "p.idx")) == dumps(idx)
    buf = io.BytesIO()
    indexfile.save(idx, buf)
    buf.seek(0)
    assert dumps(indexfile.load(buf)) == dumps(idx)


def test_same_seed_builds_identical_files():
    assert dumps(_index(seed=5)) == dumps(_index(seed=5))


def test_loaded_index_is_maintainable():
    idx = _index(seed=2)
    back = loads(dumps(idx))
    g = back.graph
    batch = [(int(g.edge_u[e]), int(g.edge_v[e]), int(g.edge_w[e]) * 3) for e in range(0, g.m, 7)]
    apply_batch(back, UpdateBatch(batch))
    apply_batch(idx, UpdateBatch(batch))
    assert dumps(back) == dumps(idx)


def test_header_checks():
    data = dumps(_index())
    with pytest.raises(IndexFormatError, match="magic"):
        loads(b"XXXX" + data[4:])
    with pytest.raises(IndexFormatError, match="version"):
        loads(data[:4] + struct.pack("<H", 2) + data[6:])
    with pytest.raises(IndexFormatError):
        loads(data[:-3])
    with pytest.raises(IndexFormatError, match="trailing"):
        loads(data + b"\0")


def test_corrupted_byte_fails_crc():
    data = bytearray(dumps(_index()))
    data[len(data) // 2] ^= 0xFF
    with pytest.raises(IndexFormatError, match="CRC"):
        loads(bytes(data))


def test_missing_section():
    data = dumps(_index())
    # drop the final section by rewriting the count
    with pytest.raises(IndexFormatError):
        loads(data[:6] + struct.pack("<H", 4) + data[8:])


def test_missing_array_is_a_format_error():
    idx = _index()
    sections = [
        (b"GRPH", indexfile._pack_arrays({k: a for k, a in indexfile._graph_arrays(idx.graph).items()
                                          if k != "edge_w"})),
        (b"HQTR", indexfile._pack_arrays(indexfile._hq_arrays(idx.hq))),
        (b"HUSC", indexfile._pack_arrays(indexfile._hu_arrays(idx.hu))),
        (b"LABL", indexfile._pack_arrays(indexfile._labels_arrays(idx.labels))),
        (b"META", b"{}"),
    ]
    out = indexfile.MAGIC + struct.pack("<HH", indexfile.VERSION, len(sections))
    for tag, payload in sections:
        out += tag + struct.pack("<Q", len(payload)) + payload + struct.pack("<I", zlib.crc32(payload))
    with pytest.raises(IndexFormatError, match="edge_w"):
        loads(out)
