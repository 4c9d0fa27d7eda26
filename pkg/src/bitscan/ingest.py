"""JSONL readers and writers for corpora, queries and relevance judgments.

One JSON object per line; blank lines are skipped but still counted, so
error line numbers match the file.

* corpus:  ``{"id": str, "vector": [float, ...], "metadata": {str: str}?}``
* queries: ``{"qid": str, "vector": [float, ...], "instruction": str?}``
* qrels:   ``{"qid": str, "doc_id": str, "rel": int >= 0}``

Loaders read the whole file before returning, so a failure never exposes a
partial result.
"""

from __future__ import annotations

import json
import os
from typing import IO, Iterable, Iterator

import numpy as np

from .core import CorpusRecord, EmbeddingVector, QueryRecord, RankedList, RelevanceJudgments, ScoredHit
from .errors import DuplicateQrel, InconsistentDim, MalformedLine

PathLike = str | os.PathLike


def _lines(path: PathLike) -> Iterator[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise MalformedLine(line_no, "expected a JSON object")
            yield line_no, obj


def _string_field(obj: dict, key: str, line_no: int) -> str:
    if key not in obj:
        raise MalformedLine(line_no, f"missing {key}")
    val = obj[key]
    if not isinstance(val, str) or not val:
        raise MalformedLine(line_no, f"{key} must be a nonempty string")
    return val


def _vector_field(obj: dict, line_no: int, dim: int | None) -> np.ndarray:
    if "vector" not in obj:
        raise MalformedLine(line_no, "missing vector")
    vec = obj["vector"]
    if not isinstance(vec, list) or not vec:
        raise MalformedLine(line_no, "vector must be a nonempty array")
    try:
        arr = np.array(vec, dtype=np.float64)
    except (TypeError, ValueError):
        raise MalformedLine(line_no, "vector entries must be numbers") from None
    if arr.ndim != 1 or not np.isfinite(arr).all():
        raise MalformedLine(line_no, "vector entries must be finite numbers")
    if dim is not None and arr.shape[0] != dim:
        raise InconsistentDim(line_no, arr.shape[0], dim)
    return arr


def load_corpus_jsonl(path: PathLike) -> list[CorpusRecord]:
    records: list[CorpusRecord] = []
    seen: set[str] = set()
    dim = None
    for line_no, obj in _lines(path):
        doc_id = _string_field(obj, "id", line_no)
        if doc_id in seen:
            raise MalformedLine(line_no, f"duplicate id {doc_id!r}")
        vec = _vector_field(obj, line_no, dim)
        dim = len(vec)
        meta = obj.get("metadata") or {}
        if not isinstance(meta, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in meta.items()):
            raise MalformedLine(line_no, "metadata must be an object of string values")
        seen.add(doc_id)
        records.append(CorpusRecord(doc_id, EmbeddingVector(vec), meta))
    return records


def load_queries_jsonl(path: PathLike) -> list[QueryRecord]:
    queries: list[QueryRecord] = []
    seen: set[str] = set()
    dim = None
    for line_no, obj in _lines(path):
        qid = _string_field(obj, "qid", line_no)
        if qid in seen:
            raise MalformedLine(line_no, f"duplicate qid {qid!r}")
        vec = _vector_field(obj, line_no, dim)
        dim = len(vec)
        instruction = obj.get("instruction")
        if instruction is not None and not isinstance(instruction, str):
            raise MalformedLine(line_no, "instruction must be a string")
        seen.add(qid)
        queries.append(QueryRecord(qid, EmbeddingVector(vec), instruction))
    return queries


def load_qrels_jsonl(path: PathLike) -> RelevanceJudgments:
    entries: dict[tuple[str, str], int] = {}
    for line_no, obj in _lines(path):
        qid = _string_field(obj, "qid", line_no)
        doc_id = _string_field(obj, "doc_id", line_no)
        if "rel" not in obj:
            raise MalformedLine(line_no, "missing rel")
        rel = obj["rel"]
        if isinstance(rel, bool) or not isinstance(rel, int):
            raise MalformedLine(line_no, "rel must be an integer")
        if rel < 0:
            raise MalformedLine(line_no, "negative grade")
        if (qid, doc_id) in entries:
            raise DuplicateQrel(qid, doc_id)
        entries[(qid, doc_id)] = rel
    return RelevanceJudgments(entries)


def load_results_jsonl(path: PathLike) -> list[RankedList]:
    """Read ``{"qid", "hits": [{"doc_id", "score"}], "timings"?}`` lines."""
    out: list[RankedList] = []
    for line_no, obj in _lines(path):
        qid = _string_field(obj, "qid", line_no)
        hits = obj.get("hits")
        if not isinstance(hits, list):
            raise MalformedLine(line_no, "hits must be an array")
        parsed = []
        for h in hits:
            if not isinstance(h, dict) or not isinstance(h.get("doc_id"), str):
                raise MalformedLine(line_no, "each hit needs a doc_id string")
            score = h.get("score", 0.0)
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise MalformedLine(line_no, "hit score must be a number")
            parsed.append(ScoredHit(h["doc_id"], float(score), 0.0))
        try:
            out.append(RankedList(qid, tuple(parsed), max(len(parsed), 1)))
        except ValueError as exc:
            raise MalformedLine(line_no, str(exc)) from None
    return out


def _dump(fh: IO[str], obj: dict) -> None:
    fh.write(json.dumps(obj, separators=(",", ":")))
    fh.write("\n")


def write_corpus_jsonl(path: PathLike, records: Iterable[CorpusRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {"id": r.doc_id, "vector": r.vector.values.tolist()}
            if r.metadata:
                obj["metadata"] = dict(r.metadata)
            _dump(fh, obj)


def write_queries_jsonl(path: PathLike, queries: Iterable[QueryRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            obj = {"qid": q.query_id, "vector": q.vector.values.tolist()}
            if q.instruction is not None:
                obj["instruction"] = q.instruction
            _dump(fh, obj)


def write_qrels_jsonl(path: PathLike, qrels: RelevanceJudgments) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid, doc_id in qrels:
            _dump(fh, {"qid": qid, "doc_id": doc_id, "rel": qrels[qid, doc_id]})


def result_line(ranked: RankedList, timings: dict[str, float] | None = None) -> str:
    obj: dict = {"qid": ranked.query_id, "hits": [h.as_json() for h in ranked.hits]}
    if timings is not None:
        obj["timings"] = timings
    return json.dumps(obj, separators=(",", ":"))
