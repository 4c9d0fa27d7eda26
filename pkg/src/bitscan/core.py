"""Shared value types: float embeddings, packed binary codes, corpus records,
relevance judgments and ranked results.

Every type here is immutable after construction. Array-backed fields are
copied and marked read-only so instances can be shared between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidParams, NonFiniteValue

WORD_BITS = 64


def words_for_dim(dim: int) -> int:
    return -(-dim // WORD_BITS)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """Dense float embedding stored in double precision."""

    values: np.ndarray

    def __init__(self, values: Iterable[float] | np.ndarray):
        arr = np.array(values, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    def __repr__(self) -> str:
        return f"EmbeddingVector(dim={self.dim})"


def as_array(v: EmbeddingVector | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(v, EmbeddingVector):
        return v.values
    return np.asarray(v, dtype=np.float64).reshape(-1)


def validate_vector(v: EmbeddingVector | Sequence[float] | np.ndarray, expected_dim: int) -> None:
    """Raise unless ``v`` has ``expected_dim`` entries, all finite."""
    arr = as_array(v)
    if arr.shape[0] != expected_dim:
        raise DimensionMismatch(arr.shape[0], expected_dim)
    check_finite(arr)


def check_finite(arr: np.ndarray) -> None:
    finite = np.isfinite(arr)
    if not finite.all():
        raise NonFiniteValue(int(np.flatnonzero(~finite)[0]))


@dataclass(frozen=True, eq=False)
class BinaryCode:
    """One bit per dimension, packed LSB-first into 64-bit words.

    Bit ``i`` lives in word ``i // 64`` at position ``i % 64``. Bits at
    positions ``>= dim`` are always zero.
    """

    words: np.ndarray
    dim: int

    def __init__(self, words: Iterable[int] | np.ndarray, dim: int):
        if dim < 1:
            raise InvalidParams(f"dim must be positive, got {dim}")
        arr = np.array(words, dtype=np.uint64).reshape(-1)
        if arr.shape[0] != words_for_dim(dim):
            raise InvalidParams(f"{arr.shape[0]} words cannot hold dim {dim}")
        tail = dim % WORD_BITS
        if tail and int(arr[-1]) >> tail:
            raise InvalidParams("padding bits beyond dim must be zero")
        object.__setattr__(self, "words", _frozen(arr))
        object.__setattr__(self, "dim", int(dim))

    @classmethod
    def from_bits(cls, bits: Iterable[int] | np.ndarray) -> "BinaryCode":
        b = np.asarray(bits, dtype=bool).reshape(-1)
        return cls(pack_bits(b[None, :])[0], b.shape[0])

    @classmethod
    def from_bytes(cls, data: bytes, dim: int) -> "BinaryCode":
        return cls(np.frombuffer(data, dtype="<u8"), dim)

    def bits(self) -> np.ndarray:
        return unpack_bits(self.words[None, :], self.dim)[0]

    def to_bytes(self) -> bytes:
        return self.words.astype("<u8").tobytes()

    @property
    def nbytes(self) -> int:
        return self.words.shape[0] * 8

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryCode):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.words, other.words)

    def __hash__(self) -> int:
        return hash((self.dim, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BinaryCode(dim={self.dim}, words=[{', '.join(hex(int(w)) for w in self.words)}])"


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack an ``(n, dim)`` boolean matrix into ``(n, ceil(dim/64))`` uint64 words."""
    bits = np.asarray(bits, dtype=bool)
    n, dim = bits.shape
    nwords = words_for_dim(dim)
    packed = np.packbits(bits, axis=1, bitorder="little")
    buf = np.zeros((n, nwords * 8), dtype=np.uint8)
    buf[:, : packed.shape[1]] = packed
    return buf.view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, dim: int) -> np.ndarray:
    as_bytes = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, count=dim, bitorder="little")


def _flat_metadata(metadata: Mapping[str, str] | None) -> Mapping[str, str]:
    if not metadata:
        return MappingProxyType({})
    out = {}
    for k, v in metadata.items():
        if not isinstance(k, str) or not isinstance(v, str):
            raise InvalidParams(f"metadata must map strings to strings, got {k!r}: {v!r}")
        out[k] = v
    return MappingProxyType(out)


@dataclass(frozen=True)
class CorpusRecord:
    doc_id: str
    vector: EmbeddingVector
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.doc_id, str) or not self.doc_id:
            raise InvalidParams("doc_id must be a nonempty string")
        if not isinstance(self.vector, EmbeddingVector):
            object.__setattr__(self, "vector", EmbeddingVector(self.vector))
        object.__setattr__(self, "metadata", _flat_metadata(self.metadata))


@dataclass(frozen=True)
class QueryRecord:
    query_id: str
    vector: EmbeddingVector
    instruction: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.query_id, str) or not self.query_id:
            raise InvalidParams("query_id must be a nonempty string")
        if not isinstance(self.vector, EmbeddingVector):
            object.__setattr__(self, "vector", EmbeddingVector(self.vector))


class RelevanceJudgments(Mapping):
    """Graded judgments keyed by ``(query_id, doc_id)``; absent pairs grade 0."""

    def __init__(self, entries: Mapping[tuple[str, str], int] | None = None):
        by_query: dict[str, dict[str, int]] = {}
        for (qid, doc_id), rel in (entries or {}).items():
            if isinstance(rel, bool) or not isinstance(rel, (int, np.integer)) or rel < 0:
                raise InvalidParams(f"grade for ({qid!r}, {doc_id!r}) must be an integer >= 0")
            by_query.setdefault(qid, {})[doc_id] = int(rel)
        self._by_query = by_query
        self._len = sum(len(v) for v in by_query.values())

    def __getitem__(self, key: tuple[str, str]) -> int:
        qid, doc_id = key
        return self._by_query[qid][doc_id]

    def __iter__(self) -> Iterator[tuple[str, str]]:
        for qid, docs in self._by_query.items():
            for doc_id in docs:
                yield (qid, doc_id)

    def __len__(self) -> int:
        return self._len

    def grade(self, query_id: str, doc_id: str) -> int:
        return self._by_query.get(query_id, {}).get(doc_id, 0)

    def for_query(self, query_id: str) -> Mapping[str, int]:
        return MappingProxyType(self._by_query.get(query_id, {}))

    def query_ids(self) -> list[str]:
        return list(self._by_query)


@dataclass(frozen=True)
class ScoredHit:
    doc_id: str
    score: float
    distance: float

    def as_json(self) -> dict:
        return {"doc_id": self.doc_id, "score": self.score}


@dataclass(frozen=True)
class RankedList:
    query_id: str
    hits: tuple[ScoredHit, ...]
    k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "hits", tuple(self.hits))
        ids = [h.doc_id for h in self.hits]
        if len(set(ids)) != len(ids):
            raise InvalidParams(f"duplicate doc_id in ranked list for {self.query_id!r}")

    @property
    def doc_ids(self) -> list[str]:
        return [h.doc_id for h in self.hits]

    def __len__(self) -> int:
        return len(self.hits)
