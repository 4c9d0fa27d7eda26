"""End-to-end routines behind the CLI: build, batch search, parity, benchmarks."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .binarizer import QuantizerModel, calibrate_mib, calibrate_sign
from .core import CorpusRecord, EmbeddingVector, QueryRecord, RankedList, RelevanceJudgments
from .engine import Namespace, SearchResponse, StageTimings, load_records
from .errors import EmptyCorpus, InvalidParams
from .kernel import resolve_threads
from .metrics import LatencySummary, latency_summary, ndcg_at_k
from .oracle import CosineOracle, recall_vs_oracle


@dataclass(frozen=True)
class BuildTimings:
    create_ms: float
    insert_ms: float


def calibrate(corpus: Sequence[CorpusRecord], mode: str) -> QuantizerModel:
    if not corpus:
        raise EmptyCorpus("corpus is empty")
    x = np.vstack([r.vector.values for r in corpus])
    if mode == "mib":
        return calibrate_mib(x)
    if mode == "sign":
        return calibrate_sign(x)
    raise InvalidParams(f"unknown mode {mode!r}")


def build_namespace(corpus: Sequence[CorpusRecord], mode: str, name: str = "default") -> tuple[Namespace, BuildTimings]:
    """Calibrate, create and fill a namespace, timing creation and insertion separately."""
    t0 = time.perf_counter()
    quantizer = calibrate(corpus, mode)
    ns = Namespace(name, quantizer.dim, quantizer, capacity=max(len(corpus), 1))
    t1 = time.perf_counter()
    load_records(ns, corpus)
    t2 = time.perf_counter()
    return ns, BuildTimings((t1 - t0) * 1e3, (t2 - t1) * 1e3)


def run_queries(
    ns: Namespace,
    queries: Sequence[QueryRecord],
    top_k: int = 100,
    scoring: str = "its",
    metadata_filter: Mapping[str, str] | None = None,
    threads: int | None = None,
) -> list[SearchResponse]:
    """Search every query; results come back in input order."""

    def one(q: QueryRecord) -> SearchResponse:
        return ns.search(q.vector, top_k, metadata_filter, scoring, q.query_id)

    workers = min(threads or resolve_threads(), max(len(queries), 1))
    if workers <= 1:
        return [one(q) for q in queries]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, queries))


def run_parity(
    corpus: Sequence[CorpusRecord],
    queries: Sequence[QueryRecord],
    qrels: RelevanceJudgments,
    modes: Sequence[str] = ("sign", "mib"),
    scoring: str = "its",
    depth: int = 100,
) -> list[dict]:
    """Binary engine vs exact cosine oracle on identical inputs, one row per mode."""
    oracle = CosineOracle(corpus)
    exact = {q.query_id: oracle.search(q, depth) for q in queries}
    oracle_ndcg = _mean([ndcg_at_k(exact[q.query_id], qrels, 10) for q in queries])
    rows = []
    for mode in modes:
        ns, _ = build_namespace(corpus, mode, f"parity-{mode}")
        ranked = [r.ranked for r in run_queries(ns, queries, depth, scoring)]
        ndcg = _mean([ndcg_at_k(r, qrels, 10) for r in ranked])
        recall = _mean([recall_vs_oracle(r, exact[r.query_id], depth) for r in ranked])
        rows.append(
            {
                "mode": mode,
                "oracle_ndcg@10": oracle_ndcg,
                "binary_ndcg@10": ndcg,
                "delta_ndcg@10": ndcg - oracle_ndcg,
                f"recall_vs_oracle@{depth}": recall,
            }
        )
    return rows


def _mean(values: Sequence[float]) -> float:
    return float(np.mean(values)) if len(values) else 0.0


def _random_fill(ns: Namespace, target: int, rng: np.random.Generator, chunk: int = 20000) -> None:
    have = ns.snapshot().count
    while have < target:
        n = min(chunk, target - have)
        x = rng.standard_normal((n, ns.dim), dtype=np.float32)
        ns.insert_codes([f"doc{have + i}" for i in range(n)], ns.quantizer.binarize_matrix(x))
        have += n


def random_namespace(size: int, dim: int, seed: int = 0, name: str = "bench") -> Namespace:
    """Namespace of ``size`` sign-quantized random Gaussian vectors."""
    ns = Namespace(name, dim, QuantizerModel.sign(dim), capacity=max(size, 1))
    _random_fill(ns, size, np.random.default_rng(seed))
    return ns


def insert_latency(ns: Namespace, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Wall time in ms of ``samples`` single-record inserts at the namespace's current size."""
    vectors = rng.standard_normal((samples, ns.dim))
    base = ns.snapshot().count
    out = np.empty(samples)
    for i in range(samples):
        rec = CorpusRecord(f"probe{base}-{i}", EmbeddingVector(vectors[i]))
        t0 = time.perf_counter()
        ns.insert(rec)
        out[i] = (time.perf_counter() - t0) * 1e3
    return out


@dataclass
class ScalingReport:
    dim: int
    summaries: dict[int, LatencySummary]
    insert_median_ms: dict[int, float]

    def distance_ratios(self) -> list[tuple[int, int, float]]:
        sizes = sorted(self.summaries)
        out = []
        for a, b in zip(sizes, sizes[1:]):
            lo = self.summaries[a].stages["calculate_distance"].mean
            hi = self.summaries[b].stages["calculate_distance"].mean
            out.append((a, b, hi / lo if lo > 0 else float("inf")))
        return out

    def insert_ratio(self) -> float:
        sizes = sorted(self.insert_median_ms)
        lo = self.insert_median_ms[sizes[0]]
        return self.insert_median_ms[sizes[-1]] / lo if lo > 0 else float("inf")


def scaling_bench(
    sizes: Sequence[int],
    dim: int = 1536,
    repeat: int = 50,
    seed: int = 0,
    insert_samples: int = 200,
    scoring: str = "its",
) -> ScalingReport:
    """Grow one random namespace through ``sizes``, timing ``repeat`` queries at each.

    Inserts are probed at the smallest and largest size; probe records are
    deleted again so they do not distort the next size.
    """
    sizes = list(sizes)
    if not sizes or any(n < 1 for n in sizes):
        raise InvalidParams("sizes must be positive")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvalidParams("sizes must be strictly ascending")
    if repeat < 1:
        raise InvalidParams("repeat must be >= 1")
    rng = np.random.default_rng(seed)
    qrng = np.random.default_rng(seed + 1)
    ns = Namespace("bench", dim, QuantizerModel.sign(dim), capacity=sizes[-1] + 2 * insert_samples)
    summaries: dict[int, LatencySummary] = {}
    inserts: dict[int, float] = {}
    for size in sizes:
        # probes are tombstoned, so the live count stays at ``size``
        _random_fill(ns, size + ns.snapshot().count - len(ns), rng)
        queries = qrng.standard_normal((repeat, dim))
        ns.search(queries[0], scoring=scoring)  # warm-up
        timings: list[StageTimings] = [ns.search(q, scoring=scoring).timings for q in queries]
        summaries[size] = latency_summary(timings)
        if insert_samples and size in (sizes[0], sizes[-1]):
            lat = insert_latency(ns, insert_samples, qrng)
            inserts[size] = float(np.median(lat))
            snap = ns.snapshot()
            for doc_id in snap.doc_ids[snap.count - insert_samples : snap.count]:
                ns.delete(doc_id)
    return ScalingReport(dim, summaries, inserts)


def ranked_lists(responses: Sequence[SearchResponse]) -> list[RankedList]:
    return [r.ranked for r in responses]
