"""Seeded clustered corpora with graded judgments.

The generator is defined by a fixed, language-neutral algorithm so a seed
reproduces the same corpus anywhere:

1. ``u64(i) = splitmix64_mix(seed + (i + 1) * 0x9E3779B97F4A7C15)`` for
   counter ``i = 0, 1, 2, ...`` (all arithmetic mod 2**64), where the mix is
   ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
   z *= 0x94D049BB133111EB; z ^= z >> 31``.
2. ``uniform(i) = (u64(i) >> 11) * 2**-53`` in ``[0, 1)``.
3. ``normal(j) = sqrt(-2 ln(1 - uniform(2j))) * cos(2 pi uniform(2j + 1))``.
4. Normals are consumed row-major: first ``clusters * dim`` for the centers
   (each row scaled to unit length), then ``clusters * per_cluster * dim``
   for the document noise, cluster by cluster.

Document ``j`` of cluster ``c`` is ``center[c] + spread * noise`` and has id
``c{c:03d}-d{j:05d}``; the query for cluster ``c`` is the center itself,
id ``q{c:03d}``. Every document of the query's cluster is judged ``rel=1``;
the quarter with the highest cosine to the center (ties by position) is
upgraded to ``rel=2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CorpusRecord, EmbeddingVector, QueryRecord, RelevanceJudgments
from .errors import InvalidParams

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, start: int, count: int) -> np.ndarray:
    """Outputs ``start .. start+count-1`` of the counter-based SplitMix64 stream."""
    with np.errstate(over="ignore"):
        i = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        z = np.uint64(seed % 2**64) + i * GAMMA
        z ^= z >> np.uint64(30)
        z *= MIX1
        z ^= z >> np.uint64(27)
        z *= MIX2
        z ^= z >> np.uint64(31)
    return z


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    return (splitmix64(seed, start, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def normals(seed: int, start: int, count: int) -> np.ndarray:
    """Standard normals ``start .. start+count-1`` (Box-Muller, cosine branch)."""
    u = uniforms(seed, 2 * start, 2 * count)
    return np.sqrt(-2.0 * np.log1p(-u[0::2])) * np.cos(2.0 * np.pi * u[1::2])


@dataclass(frozen=True)
class SyntheticSet:
    corpus: list[CorpusRecord]
    queries: list[QueryRecord]
    qrels: RelevanceJudgments
    centers: np.ndarray
    vectors: np.ndarray


def generate_synthetic(clusters: int, per_cluster: int, dim: int, spread: float, seed: int) -> SyntheticSet:
    if clusters < 2:
        raise InvalidParams(f"clusters must be >= 2, got {clusters}")
    if per_cluster < 1:
        raise InvalidParams(f"per_cluster must be >= 1, got {per_cluster}")
    if dim < 8:
        raise InvalidParams(f"dim must be >= 8, got {dim}")
    if not np.isfinite(spread) or spread < 0:
        raise InvalidParams(f"spread must be finite and >= 0, got {spread}")
    if seed < 0:
        raise InvalidParams(f"seed must be non-negative, got {seed}")

    centers = normals(seed, 0, clusters * dim).reshape(clusters, dim)
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)

    vectors = np.empty((clusters * per_cluster, dim), dtype=np.float64)
    offset = clusters * dim
    block = per_cluster * dim
    for c in range(clusters):
        noise = normals(seed, offset + c * block, block).reshape(per_cluster, dim)
        vectors[c * per_cluster : (c + 1) * per_cluster] = centers[c] + spread * noise

    corpus = [
        CorpusRecord(f"c{c:03d}-d{j:05d}", EmbeddingVector(vectors[c * per_cluster + j]), {"cluster": str(c)})
        for c in range(clusters)
        for j in range(per_cluster)
    ]
    queries = [QueryRecord(f"q{c:03d}", EmbeddingVector(centers[c])) for c in range(clusters)]

    entries: dict[tuple[str, str], int] = {}
    top = max(per_cluster // 4, 1)
    for c in range(clusters):
        rows = vectors[c * per_cluster : (c + 1) * per_cluster]
        unit = rows / np.sqrt(np.einsum("ij,ij->i", rows, rows))[:, None]
        cos = unit @ (centers[c] / np.sqrt(np.dot(centers[c], centers[c])))
        order = np.lexsort((np.arange(per_cluster), -cos))
        upgraded = set(order[:top].tolist())
        for j in range(per_cluster):
            entries[(f"q{c:03d}", f"c{c:03d}-d{j:05d}")] = 2 if j in upgraded else 1
    return SyntheticSet(corpus, queries, RelevanceJudgments(entries), centers, vectors)
