"""Index-free namespace store and the instrumented 12-stage query pipeline.

A namespace is an append log of packed codes. Writers are serialized by a
lock and publish an immutable :class:`Snapshot` after every change; readers
grab the current snapshot once and never see later appends or deletes.
Rows below a published count are never written again, so a snapshot can
share the growing code buffer without copying it.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, fields
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .binarizer import QuantizerModel
from .core import (
    BinaryCode,
    CorpusRecord,
    EmbeddingVector,
    RankedList,
    ScoredHit,
    as_array,
    validate_vector,
    words_for_dim,
)
from .errors import (
    BitscanError,
    DimensionMismatch,
    DuplicateDocId,
    InvalidParams,
    NameConflict,
    UnknownDocId,
    UnknownNamespace,
)
from .kernel import batch_hamming, its_scores

CANDIDATE_POOL = 100
SCORING_MODES = ("hamming_only", "its")
_EMPTY_META: Mapping[str, str] = MappingProxyType({})


@dataclass(frozen=True)
class StageTimings:
    """Milliseconds spent in each pipeline stage, in execution order."""

    authorize: float = 0.0
    parse_validate: float = 0.0
    validate_namespace: float = 0.0
    prepare_vector: float = 0.0
    fetch_data: float = 0.0
    calculate_distance: float = 0.0
    select_candidates: float = 0.0
    calculate_scores: float = 0.0
    fetch_complete_data: float = 0.0
    apply_metadata_filter: float = 0.0
    reorder_filter: float = 0.0
    format_response: float = 0.0

    @classmethod
    def stage_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @property
    def total(self) -> float:
        return sum(self.as_dict().values())

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.stage_names()}


STAGES = StageTimings.stage_names()


@dataclass(frozen=True)
class SearchRequest:
    namespace: str
    query_vector: EmbeddingVector
    top_k: int = 100
    metadata_filter: Mapping[str, str] | None = None
    scoring: str = "its"
    query_id: str = ""


@dataclass(frozen=True)
class SearchResponse:
    ranked: RankedList
    timings: StageTimings
    wall_ms: float


class Snapshot(NamedTuple):
    codes: np.ndarray
    count: int
    tombstones: np.ndarray
    doc_ids: list
    metadata: list

    @property
    def live_count(self) -> int:
        return self.count - int(self.tombstones.shape[0])


@dataclass(frozen=True)
class NamespaceStats:
    live: int
    tombstones: int
    code_bytes: int
    float32_bytes: int

    @property
    def compression_ratio(self) -> float:
        return self.float32_bytes / self.code_bytes if self.code_bytes else 0.0

    def as_dict(self) -> dict:
        return {
            "live": self.live,
            "tombstones": self.tombstones,
            "code_bytes": self.code_bytes,
            "float32_bytes": self.float32_bytes,
            "compression_ratio": self.compression_ratio,
        }


class Namespace:
    def __init__(self, name: str, dim: int, quantizer: QuantizerModel, capacity: int = 1024):
        if not name:
            raise InvalidParams("namespace name must be nonempty")
        if dim < 1:
            raise InvalidParams(f"dim must be positive, got {dim}")
        if quantizer.dim != dim:
            raise DimensionMismatch(quantizer.dim, dim)
        self.name = name
        self.dim = dim
        self.quantizer = quantizer
        self.nwords = words_for_dim(dim)
        self._buf = np.zeros((max(capacity, 1), self.nwords), dtype=np.uint64)
        self._doc_ids: list[str] = []
        self._metadata: list[Mapping[str, str]] = []
        self._live: dict[str, int] = {}
        self._lock = threading.Lock()
        self._snapshot = Snapshot(self._buf[:0], 0, np.empty(0, dtype=np.int64), self._doc_ids, self._metadata)

    def __repr__(self) -> str:
        return f"Namespace({self.name!r}, dim={self.dim}, live={len(self)})"

    def __len__(self) -> int:
        return self._snapshot.live_count

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._live

    def snapshot(self) -> Snapshot:
        return self._snapshot

    def ordinal(self, doc_id: str) -> int:
        try:
            return self._live[doc_id]
        except KeyError:
            raise UnknownDocId(doc_id) from None

    def _reserve(self, extra: int) -> None:
        need = self._snapshot.count + extra
        if need <= self._buf.shape[0]:
            return
        cap = self._buf.shape[0]
        while cap < need:
            cap *= 2
        grown = np.zeros((cap, self.nwords), dtype=np.uint64)
        grown[: self._snapshot.count] = self._buf[: self._snapshot.count]
        # published snapshots keep a reference to the old buffer
        self._buf = grown

    def _publish(self, count: int, tombstones: np.ndarray) -> None:
        self._snapshot = Snapshot(self._buf[:count], count, tombstones, self._doc_ids, self._metadata)

    def insert(self, rec: CorpusRecord) -> int:
        """Append one record; it is visible to every query started afterwards."""
        validate_vector(rec.vector, self.dim)
        code = self.quantizer.binarize(rec.vector)
        return self.insert_code(rec.doc_id, code, rec.metadata)

    def insert_code(self, doc_id: str, code: BinaryCode, metadata: Mapping[str, str] | None = None) -> int:
        if code.dim != self.dim:
            raise DimensionMismatch(code.dim, self.dim)
        meta = MappingProxyType(dict(metadata)) if metadata else _EMPTY_META
        with self._lock:
            if doc_id in self._live:
                raise DuplicateDocId(doc_id)
            self._reserve(1)
            snap = self._snapshot
            ordinal = snap.count
            self._buf[ordinal] = code.words
            self._doc_ids.append(doc_id)
            self._metadata.append(meta)
            self._live[doc_id] = ordinal
            self._publish(ordinal + 1, snap.tombstones)
        return ordinal

    def insert_many(
        self,
        doc_ids: Sequence[str],
        vectors: np.ndarray,
        metadata: Sequence[Mapping[str, str] | None] | None = None,
    ) -> range:
        """Bulk append of an ``(n, dim)`` matrix; published as one snapshot."""
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(doc_ids):
            raise InvalidParams("vectors must be an (n, dim) matrix matching doc_ids")
        return self.insert_codes(doc_ids, self.quantizer.binarize_matrix(vectors), metadata)

    def insert_codes(
        self,
        doc_ids: Sequence[str],
        codes: np.ndarray,
        metadata: Sequence[Mapping[str, str] | None] | None = None,
    ) -> range:
        codes = np.asarray(codes, dtype=np.uint64)
        n = len(doc_ids)
        if codes.shape != (n, self.nwords):
            raise DimensionMismatch(codes.shape[-1] * 64, self.dim)
        tail = self.dim % 64
        if n and tail and np.any(codes[:, -1] >> np.uint64(tail)):
            raise InvalidParams("padding bits beyond dim must be zero")
        metas = [MappingProxyType(dict(m)) if m else _EMPTY_META for m in (metadata or [None] * n)]
        if len(metas) != n:
            raise InvalidParams("metadata must match doc_ids")
        with self._lock:
            seen = set()
            for d in doc_ids:
                if not isinstance(d, str) or not d:
                    raise InvalidParams("doc_id must be a nonempty string")
                if d in self._live or d in seen:
                    raise DuplicateDocId(d)
                seen.add(d)
            self._reserve(n)
            snap = self._snapshot
            start = snap.count
            self._buf[start : start + n] = codes
            self._doc_ids.extend(doc_ids)
            self._metadata.extend(metas)
            for i, d in enumerate(doc_ids):
                self._live[d] = start + i
            self._publish(start + n, snap.tombstones)
        return range(start, start + n)

    def delete(self, doc_id: str) -> None:
        with self._lock:
            ordinal = self._live.pop(doc_id, None)
            if ordinal is None:
                raise UnknownDocId(doc_id)
            snap = self._snapshot
            tomb = np.append(snap.tombstones, np.int64(ordinal))
            tomb.flags.writeable = False
            self._publish(snap.count, tomb)

    def stats(self) -> NamespaceStats:
        snap = self._snapshot
        live = snap.live_count
        return NamespaceStats(
            live=live,
            tombstones=int(snap.tombstones.shape[0]),
            code_bytes=live * self.nwords * 8,
            float32_bytes=live * self.dim * 4,
        )

    def live_items(self) -> tuple[list[str], np.ndarray, list[Mapping[str, str]]]:
        """Live doc ids, codes and metadata in ordinal order."""
        snap = self._snapshot
        keep = np.ones(snap.count, dtype=bool)
        keep[snap.tombstones] = False
        idx = np.flatnonzero(keep)
        return [snap.doc_ids[i] for i in idx], snap.codes[idx].copy(), [snap.metadata[i] for i in idx]

    def compact(self, name: str | None = None) -> "Namespace":
        """New namespace holding only live records, with dense ordinals."""
        ids, codes, metas = self.live_items()
        out = Namespace(name or self.name, self.dim, self.quantizer, capacity=max(len(ids), 1))
        out.insert_codes(ids, codes, metas)
        return out

    def search(
        self,
        query: EmbeddingVector | Sequence[float] | np.ndarray,
        top_k: int = 100,
        metadata_filter: Mapping[str, str] | None = None,
        scoring: str = "its",
        query_id: str = "",
    ) -> SearchResponse:
        if not isinstance(query, EmbeddingVector):
            query = EmbeddingVector(query)
        req = SearchRequest(self.name, query, top_k, metadata_filter, scoring, query_id)
        return execute(req, lambda name: self if name == self.name else None)


class Engine:
    """Registry of namespaces; the entry point for :class:`SearchRequest`."""

    def __init__(self) -> None:
        self._namespaces: dict[str, Namespace] = {}
        self._lock = threading.Lock()

    def create_namespace(self, name: str, dim: int, quantizer: QuantizerModel) -> Namespace:
        with self._lock:
            if name in self._namespaces:
                raise NameConflict(name)
            ns = Namespace(name, dim, quantizer)
            self._namespaces[name] = ns
        return ns

    def add_namespace(self, ns: Namespace) -> Namespace:
        with self._lock:
            if ns.name in self._namespaces:
                raise NameConflict(ns.name)
            self._namespaces[ns.name] = ns
        return ns

    def drop_namespace(self, name: str) -> None:
        with self._lock:
            if self._namespaces.pop(name, None) is None:
                raise UnknownNamespace(name)

    def namespace(self, name: str) -> Namespace:
        try:
            return self._namespaces[name]
        except KeyError:
            raise UnknownNamespace(name) from None

    def names(self) -> list[str]:
        return sorted(self._namespaces)

    def insert(self, name: str, rec: CorpusRecord) -> int:
        return self.namespace(name).insert(rec)

    def delete(self, name: str, doc_id: str) -> None:
        self.namespace(name).delete(doc_id)

    def stats(self, name: str) -> NamespaceStats:
        return self.namespace(name).stats()

    def search(self, req: SearchRequest) -> SearchResponse:
        return execute(req, self._namespaces.get)


def _select(distance: np.ndarray, pool: int) -> np.ndarray:
    """Ordinals of the ``pool`` smallest distances, ties by ascending ordinal."""
    n = distance.shape[0]
    # distance <= dim + 1, so this key is unique and orders by (distance, ordinal)
    key = distance * n + np.arange(n, dtype=np.int64)
    if pool < n:
        part = np.argpartition(key, pool - 1)[:pool]
        return part[np.argsort(key[part])]
    return np.argsort(key)


def execute(req: SearchRequest, resolve) -> SearchResponse:
    """Run the query pipeline; ``resolve(name)`` returns a Namespace or None."""
    clock = time.perf_counter
    wall0 = clock()
    marks = [wall0]

    # authorize: local engine has no credentials, only a request-type check
    if not isinstance(req, SearchRequest):
        raise InvalidParams("expected a SearchRequest")
    marks.append(clock())

    # parse_validate
    if isinstance(req.top_k, bool) or not isinstance(req.top_k, (int, np.integer)) or req.top_k < 1:
        raise InvalidParams(f"top_k must be an integer >= 1, got {req.top_k!r}")
    if req.scoring not in SCORING_MODES:
        raise InvalidParams(f"scoring must be one of {SCORING_MODES}, got {req.scoring!r}")
    filt = dict(req.metadata_filter or {})
    for k, v in filt.items():
        if not isinstance(k, str) or not isinstance(v, str):
            raise InvalidParams("metadata filter must map strings to strings")
    qvec = as_array(req.query_vector)
    marks.append(clock())

    # validate_namespace
    ns = resolve(req.namespace)
    if ns is None:
        raise UnknownNamespace(req.namespace)
    validate_vector(qvec, ns.dim)
    marks.append(clock())

    # prepare_vector
    qcode = ns.quantizer.binarize(qvec)
    marks.append(clock())

    # fetch_data
    snap = ns.snapshot()
    n = snap.count
    marks.append(clock())

    # calculate_distance: exhaustive, every stored code
    distance = np.empty(n, dtype=np.int64)
    batch_hamming(qcode, snap.codes, distance)
    if snap.tombstones.shape[0]:
        distance[snap.tombstones] = ns.dim + 1
    marks.append(clock())

    # select_candidates
    pool = min(max(int(req.top_k), CANDIDATE_POOL), snap.live_count)
    cand = _select(distance, pool) if pool else np.empty(0, dtype=np.int64)
    cand_dist = distance[cand]
    marks.append(clock())

    # calculate_scores
    if req.scoring == "its":
        scores = its_scores(qcode, snap.codes[cand], ns.quantizer.weights)
    else:
        scores = (ns.dim - cand_dist).astype(np.float64)
    marks.append(clock())

    # fetch_complete_data
    cand_ids = [snap.doc_ids[i] for i in cand.tolist()]
    cand_meta = [snap.metadata[i] for i in cand.tolist()]
    marks.append(clock())

    # apply_metadata_filter
    if filt:
        keep = np.array([all(m.get(k) == v for k, v in filt.items()) for m in cand_meta], dtype=bool)
    else:
        keep = np.ones(cand.shape[0], dtype=bool)
    kept = np.flatnonzero(keep)
    marks.append(clock())

    # reorder_filter: final score descending, ties by ascending ordinal
    order = kept[np.lexsort((cand[kept], -scores[kept]))][: int(req.top_k)]
    marks.append(clock())

    # format_response
    hits = tuple(
        ScoredHit(cand_ids[j], float(scores[j]), int(cand_dist[j])) for j in order.tolist()
    )
    ranked = RankedList(req.query_id, hits, int(req.top_k))
    marks.append(clock())
    wall_ms = (clock() - wall0) * 1e3

    timings = StageTimings(*((b - a) * 1e3 for a, b in zip(marks, marks[1:])))
    return SearchResponse(ranked, timings, wall_ms)


def load_records(ns: Namespace, records: Iterable[CorpusRecord], batch: int = 4096) -> int:
    """Bulk-insert records in batches; returns the number inserted."""
    total = 0
    ids: list[str] = []
    rows: list[np.ndarray] = []
    metas: list[Mapping[str, str]] = []

    def flush() -> None:
        nonlocal total
        if ids:
            ns.insert_many(ids, np.vstack(rows), metas)
            total += len(ids)
            ids.clear()
            rows.clear()
            metas.clear()

    for rec in records:
        if rec.vector.dim != ns.dim:
            raise DimensionMismatch(rec.vector.dim, ns.dim)
        ids.append(rec.doc_id)
        rows.append(rec.vector.values)
        metas.append(rec.metadata)
        if len(ids) >= batch:
            flush()
    flush()
    return total


__all__ = [
    "BitscanError",
    "Engine",
    "Namespace",
    "NamespaceStats",
    "SearchRequest",
    "SearchResponse",
    "Snapshot",
    "STAGES",
    "StageTimings",
    "execute",
    "load_records",
]
