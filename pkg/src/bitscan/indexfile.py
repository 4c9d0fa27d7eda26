"""On-disk index format.

Layout, all integers little-endian::

    magic            8 bytes  b"BSCANIDX"
    format_version   u32      1
    dim              u32
    count            u64      live documents
    mode             u8       0 = sign, 1 = mib
    thresholds       dim x f64
    weights          dim x f64
    bit_frequencies  dim x f64
    codes            count x ceil(dim/64) x u64
    doc ids          count x (u32 byte length, UTF-8)
    metadata         count x (u32 byte length, UTF-8 JSON object; length 0 = none)
    checksum         u64      first 8 bytes of BLAKE2b-64 over everything above

Tombstoned documents are dropped on save, so a loaded namespace always has
dense ordinals.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct

import numpy as np

from .binarizer import QuantizerModel
from .engine import Namespace
from .errors import ChecksumMismatch, UnsupportedVersion

MAGIC = b"BSCANIDX"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIQB")
_U32 = struct.Struct("<I")
_MODES = {"sign": 0, "mib": 1}


def checksum(data: bytes | memoryview) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def encode_index(ns: Namespace) -> bytes:
    ids, codes, metas = ns.live_items()
    q = ns.quantizer
    parts = [
        _HEADER.pack(MAGIC, FORMAT_VERSION, ns.dim, len(ids), _MODES[q.mode]),
        q.thresholds.astype("<f8").tobytes(),
        q.weights.astype("<f8").tobytes(),
        q.bit_frequencies.astype("<f8").tobytes(),
        np.ascontiguousarray(codes, dtype="<u8").tobytes(),
    ]
    for doc_id in ids:
        raw = doc_id.encode("utf-8")
        parts += [_U32.pack(len(raw)), raw]
    for meta in metas:
        raw = json.dumps(dict(meta), sort_keys=True, separators=(",", ":")).encode("utf-8") if meta else b""
        parts += [_U32.pack(len(raw)), raw]
    body = b"".join(parts)
    return body + struct.pack("<Q", checksum(body))


class _Reader:
    def __init__(self, data: memoryview):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.data):
            raise ChecksumMismatch("index file is truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def string(self) -> str:
        return bytes(self.take(self.u32())).decode("utf-8")


def decode_index(data: bytes, name: str = "default") -> Namespace:
    if len(data) < _HEADER.size + 8:
        raise UnsupportedVersion("file too short to be a bitscan index")
    magic, version, dim, count, mode = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise UnsupportedVersion(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"format version {version} not supported (expected {FORMAT_VERSION})")
    body = memoryview(data)[:-8]
    (stored,) = struct.unpack("<Q", data[-8:])
    if checksum(body) != stored:
        raise ChecksumMismatch("index checksum does not match contents")
    modes = {v: k for k, v in _MODES.items()}
    if mode not in modes or dim < 1:
        raise UnsupportedVersion(f"invalid header (mode={mode}, dim={dim})")

    r = _Reader(body)
    r.pos = _HEADER.size
    vec = lambda: np.frombuffer(r.take(8 * dim), dtype="<f8").astype(np.float64)
    thresholds, weights, freqs = vec(), vec(), vec()
    nwords = -(-dim // 64)
    codes = np.frombuffer(r.take(8 * nwords * count), dtype="<u8").astype(np.uint64).reshape(count, nwords)
    ids = [r.string() for _ in range(count)]
    metas = []
    for _ in range(count):
        raw = r.string()
        metas.append(json.loads(raw) if raw else None)
    if r.pos != len(body):
        raise ChecksumMismatch("trailing bytes after metadata table")

    quantizer = QuantizerModel(modes[mode], thresholds, weights, freqs)
    ns = Namespace(name, dim, quantizer, capacity=max(count, 1))
    ns.insert_codes(ids, codes, metas)
    return ns


def save_index(ns: Namespace, path: str | os.PathLike) -> None:
    data = encode_index(ns)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load_index(path: str | os.PathLike, name: str | None = None) -> Namespace:
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_index(data, name or os.path.splitext(os.path.basename(os.fspath(path)))[0] or "default")
