"""Exact float baseline: exhaustive cosine scan in double precision."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import CorpusRecord, EmbeddingVector, QueryRecord, RankedList, ScoredHit, as_array
from .errors import DimensionMismatch, InvalidParams, QueryMismatch, ZeroNorm


def cosine(a: EmbeddingVector | Sequence[float], b: EmbeddingVector | Sequence[float]) -> float:
    x = as_array(a)
    y = as_array(b)
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch(y.shape[0], x.shape[0])
    nx = float(np.sqrt(np.dot(x, x)))
    ny = float(np.sqrt(np.dot(y, y)))
    if nx == 0.0:
        raise ZeroNorm("a")
    if ny == 0.0:
        raise ZeroNorm("b")
    return float(np.dot(x, y)) / (nx * ny)


class CosineOracle:
    """Pre-normalized corpus matrix for repeated exact searches."""

    def __init__(self, corpus: Sequence[CorpusRecord]):
        self.doc_ids = [r.doc_id for r in corpus]
        if not corpus:
            self.matrix = np.empty((0, 0))
            return
        x = np.vstack([r.vector.values for r in corpus])
        norms = np.sqrt(np.einsum("ij,ij->i", x, x))
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ZeroNorm(self.doc_ids[int(zero[0])])
        self.matrix = x / norms[:, None]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def search(self, q: QueryRecord, k: int) -> RankedList:
        if k < 1:
            raise InvalidParams(f"k must be >= 1, got {k}")
        if not self.doc_ids:
            return RankedList(q.query_id, (), k)
        v = q.vector.values
        if v.shape[0] != self.dim:
            raise DimensionMismatch(v.shape[0], self.dim)
        norm = float(np.sqrt(np.dot(v, v)))
        if norm == 0.0:
            raise ZeroNorm(q.query_id)
        scores = self.matrix @ (v / norm)
        order = np.lexsort((np.arange(scores.shape[0]), -scores))[:k]
        hits = tuple(ScoredHit(self.doc_ids[i], float(scores[i]), 1.0 - float(scores[i])) for i in order.tolist())
        return RankedList(q.query_id, hits, k)


def exact_search(corpus: Sequence[CorpusRecord], q: QueryRecord, k: int) -> RankedList:
    """Top-k by descending cosine, ties by ascending corpus position."""
    return CosineOracle(corpus).search(q, k)


def recall_vs_oracle(binary_results: RankedList, oracle_results: RankedList, k: int) -> float:
    if binary_results.query_id != oracle_results.query_id:
        raise QueryMismatch(binary_results.query_id, oracle_results.query_id)
    if k < 1:
        raise InvalidParams(f"k must be >= 1, got {k}")
    got = set(binary_results.doc_ids[:k])
    want = set(oracle_results.doc_ids[:k])
    return len(got & want) / k
