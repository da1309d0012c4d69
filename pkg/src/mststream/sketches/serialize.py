"""Framed binary blobs for sketch state.

Layout: magic `MSTS`, u16 version, u16 kind length, kind, u32 meta
length, JSON meta, u16 array count, then per array a u64 length and the
array in numpy .npy format.
"""
import io
import json
import struct

import numpy as np

MAGIC = b"MSTS"
VERSION = 1


def pack(kind, meta, arrays):
    out = io.BytesIO()
    kb = kind.encode()
    mb = json.dumps(meta, sort_keys=True).encode()
    out.write(MAGIC + struct.pack("<HH", VERSION, len(kb)) + kb)
    out.write(struct.pack("<I", len(mb)) + mb)
    out.write(struct.pack("<H", len(arrays)))
    for a in arrays:
        buf = io.BytesIO()
        np.save(buf, np.ascontiguousarray(a), allow_pickle=False)
        raw = buf.getvalue()
        out.write(struct.pack("<Q", len(raw)) + raw)
    return out.getvalue()


def unpack(blob, expect_kind=None):
    view = memoryview(blob)
    if bytes(view[:4]) != MAGIC:
        raise ValueError("not a sketch blob")
    version, klen = struct.unpack_from("<HH", view, 4)
    if version != VERSION:
        raise ValueError(f"unsupported sketch blob version {version}")
    pos = 8
    kind = bytes(view[pos:pos + klen]).decode()
    pos += klen
    if expect_kind is not None and kind != expect_kind:
        raise ValueError(f"blob holds a {kind} sketch, expected {expect_kind}")
    (mlen,) = struct.unpack_from("<I", view, pos)
    pos += 4
    meta = json.loads(bytes(view[pos:pos + mlen]))
    pos += mlen
    (na,) = struct.unpack_from("<H", view, pos)
    pos += 2
    arrays = []
    for _ in range(na):
        (alen,) = struct.unpack_from("<Q", view, pos)
        pos += 8
        arrays.append(np.load(io.BytesIO(bytes(view[pos:pos + alen])), allow_pickle=False))
        pos += alen
    return meta, arrays
