import threading

import numpy as np
import pytest

from bitscan.binarizer import QuantizerModel, calibrate_mib
from bitscan.core import CorpusRecord, EmbeddingVector
from bitscan.engine import STAGES, Engine, Namespace, SearchRequest
from bitscan.errors import (
    DimensionMismatch,
    DuplicateDocId,
    InvalidParams,
    NameConflict,
    UnknownDocId,
    UnknownNamespace,
)

from oracles import naive_hamming


def filled(rng, n=200, dim=64, mode="sign", meta=None):
    x = rng.standard_normal((n, dim))
    q = calibrate_mib(x) if mode == "mib" else QuantizerModel.sign(dim)
    ns = Namespace("t", dim, q)
    for i in range(n):
        ns.insert(CorpusRecord(f"d{i}", EmbeddingVector(x[i]), meta(i) if meta else None))
    return ns, x


def test_create_namespace():
    eng = Engine()
    ns = eng.create_namespace("legal", 1536, QuantizerModel.sign(1536))
    assert ns.dim == 1536 and len(ns) == 0
    with pytest.raises(NameConflict):
        eng.create_namespace("legal", 1536, QuantizerModel.sign(1536))
    with pytest.raises(DimensionMismatch):
        eng.create_namespace("other", 16, QuantizerModel.sign(8))


def test_insert_ordinals_and_duplicates():
    ns = Namespace("n", 4, QuantizerModel.sign(4))
    assert ns.insert(CorpusRecord("a", EmbeddingVector([1, 2, 3, 4]))) == 0
    assert ns.insert(CorpusRecord("b", EmbeddingVector([1, 2, 3, 4]))) == 1
    with pytest.raises(DuplicateDocId):
        ns.insert(CorpusRecord("a", EmbeddingVector([1, 2, 3, 4])))
    with pytest.raises(DimensionMismatch):
        ns.insert(CorpusRecord("c", EmbeddingVector([1, 2, 3])))


def test_self_match_ranks_first(rng):
    ns, x = filled(rng, 3, 32)
    resp = ns.search(x[1], scoring="hamming_only")
    assert resp.ranked.hits[0].doc_id == "d1"
    assert resp.ranked.hits[0].distance == 0


def test_insert_then_search_against_oracle_scan(rng):
    ns, x = filled(rng, 300, 96)
    v = rng.standard_normal(96)
    ns.insert(CorpusRecord("fresh", EmbeddingVector(v)))
    resp = ns.search(v, top_k=5)
    assert resp.ranked.hits[0].doc_id == "fresh"
    code = ns.quantizer.binarize(v)
    brute = sorted(naive_hamming(code, ns.quantizer.binarize(row), 96) for row in x)
    assert brute[0] >= 0 and resp.ranked.hits[0].distance == 0


def test_delete_semantics(rng):
    ns, x = filled(rng, 50, 64)
    ns.delete("d7")
    assert "d7" not in ns.search(x[7], top_k=50).ranked.doc_ids
    with pytest.raises(UnknownDocId):
        ns.delete("d7")
    with pytest.raises(UnknownDocId):
        ns.delete("nope")
    ordinal = ns.insert(CorpusRecord("d7", EmbeddingVector(x[7])))
    assert ordinal == 50
    assert ns.search(x[7], top_k=1).ranked.doc_ids == ["d7"]


def test_full_scan_matches_brute_force(rng):
    ns, x = filled(rng, 150, 100)
    q = rng.standard_normal(100)
    qc = ns.quantizer.binarize(q)
    resp = ns.search(q, top_k=20, scoring="hamming_only")
    expected = sorted(range(150), key=lambda i: (naive_hamming(qc, ns.quantizer.binarize(x[i]), 100), i))[:20]
    assert resp.ranked.doc_ids == [f"d{i}" for i in expected]
    assert [h.score for h in resp.ranked.hits] == [100 - h.distance for h in resp.ranked.hits]


def test_its_rescoring_uses_weights(rng):
    ns, x = filled(rng, 120, 64, mode="mib")
    q = rng.standard_normal(64)
    resp = ns.search(q, top_k=10, scoring="its")
    qc = ns.quantizer.binarize(q)
    from bitscan.kernel import its_score

    for h in resp.ranked.hits:
        i = int(h.doc_id[1:])
        assert h.score == its_score(qc, ns.quantizer.binarize(x[i]), ns.quantizer.weights)
    scores = [h.score for h in resp.ranked.hits]
    assert scores == sorted(scores, reverse=True)


def test_candidate_pool_is_hamming_top_100(rng):
    ns, x = filled(rng, 400, 64, mode="mib")
    q = rng.standard_normal(64)
    its = ns.search(q, top_k=400, scoring="its").ranked
    ham = ns.search(q, top_k=100, scoring="hamming_only").ranked
    # requesting more than the pool widens it to top_k
    assert len(its) == 400
    small = ns.search(q, top_k=10, scoring="its").ranked
    assert set(small.doc_ids) <= set(ham.doc_ids)


def test_uniform_weights_its_equals_hamming(rng):
    dim = 64
    x = rng.standard_normal((500, dim))
    q = QuantizerModel("mib", np.zeros(dim), np.full(dim, 0.7), np.full(dim, 0.5))
    ns = Namespace("u", dim, q)
    ns.insert_many([f"d{i}" for i in range(500)], x)
    for _ in range(50):
        v = rng.standard_normal(dim)
        a = ns.search(v, scoring="its").ranked
        b = ns.search(v, scoring="hamming_only").ranked
        assert a.doc_ids == b.doc_ids


def test_metadata_filter(rng):
    ns, x = filled(rng, 200, 64, meta=lambda i: {"lang": "de" if i % 3 == 0 else "en"})
    resp = ns.search(rng.standard_normal(64), top_k=50, metadata_filter={"lang": "de"})
    assert resp.ranked.hits
    for h in resp.ranked.hits:
        assert int(h.doc_id[1:]) % 3 == 0


def test_ties_break_by_ordinal():
    ns = Namespace("t", 8, QuantizerModel.sign(8))
    for i in range(5):
        ns.insert(CorpusRecord(f"d{i}", EmbeddingVector(np.ones(8))))
    for scoring in ("its", "hamming_only"):
        assert ns.search(np.ones(8), top_k=5, scoring=scoring).ranked.doc_ids == [f"d{i}" for i in range(5)]


def test_empty_namespace_returns_empty_list():
    ns = Namespace("e", 8, QuantizerModel.sign(8))
    resp = ns.search(np.ones(8))
    assert resp.ranked.hits == ()


def test_search_errors(rng):
    eng = Engine()
    eng.create_namespace("a", 8, QuantizerModel.sign(8))
    with pytest.raises(UnknownNamespace):
        eng.search(SearchRequest("zzz", EmbeddingVector(np.ones(8))))
    with pytest.raises(DimensionMismatch):
        eng.search(SearchRequest("a", EmbeddingVector(np.ones(4))))
    with pytest.raises(InvalidParams):
        eng.search(SearchRequest("a", EmbeddingVector(np.ones(8)), top_k=0))
    with pytest.raises(InvalidParams):
        eng.search(SearchRequest("a", EmbeddingVector(np.ones(8)), scoring="bm25"))


def test_response_length_is_min_k_and_corpus(rng):
    ns, _ = filled(rng, 30, 16)
    assert len(ns.search(rng.standard_normal(16), top_k=100).ranked) == 30
    assert len(ns.search(rng.standard_normal(16), top_k=7).ranked) == 7


def test_stats_examples(rng):
    ns = Namespace("s", 1536, QuantizerModel.sign(1536))
    assert ns.stats().as_dict() == {
        "live": 0, "tombstones": 0, "code_bytes": 0, "float32_bytes": 0, "compression_ratio": 0.0,
    }
    ns.insert_many([f"d{i}" for i in range(10)], rng.standard_normal((10, 1536)))
    s = ns.stats()
    assert (s.code_bytes, s.float32_bytes, s.compression_ratio) == (1920, 61440, 32.0)
    ns.delete("d0")
    ns.delete("d1")
    s = ns.stats()
    assert (s.live, s.tombstones) == (8, 2)


def test_timings_cover_all_stages(rng):
    ns, x = filled(rng, 100, 64)
    resp = ns.search(x[0])
    t = resp.timings.as_dict()
    assert tuple(t) == STAGES and len(STAGES) == 12
    assert all(v >= 0 for v in t.values())
    assert resp.timings.total <= resp.wall_ms


def test_stage_sum_matches_wall_clock(rng):
    ns = Namespace("w", 1536, QuantizerModel.sign(1536))
    ns.insert_many([f"d{i}" for i in range(20000)], rng.standard_normal((20000, 1536)).astype(np.float32))
    for _ in range(10):
        resp = ns.search(rng.standard_normal(1536))
        assert abs(resp.wall_ms - resp.timings.total) <= 0.05 * resp.wall_ms


def test_determinism(rng):
    ns, x = filled(rng, 500, 128, mode="mib")
    q = rng.standard_normal(128)
    first = ns.search(q, top_k=50).ranked
    for _ in range(5):
        assert ns.search(q, top_k=50).ranked == first


def test_snapshot_isolation_under_concurrent_inserts():
    dim = 64
    ns = Namespace("c", dim, QuantizerModel.sign(dim), capacity=2)
    v = np.ones(dim)
    stop = threading.Event()
    errors = []

    def writer():
        for i in range(3000):
            ns.insert(CorpusRecord(f"d{i:05d}", EmbeddingVector(v)))
        stop.set()

    def reader():
        while not stop.is_set():
            hits = ns.search(v, top_k=100000, scoring="hamming_only").ranked.doc_ids
            # every stored doc is identical, so a consistent snapshot is an exact prefix
            if hits != [f"d{i:05d}" for i in range(len(hits))]:
                errors.append(hits)

    threads = [threading.Thread(target=writer), threading.Thread(target=reader), threading.Thread(target=reader)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert len(ns) == 3000


def test_compact_keeps_live_order(rng):
    ns, x = filled(rng, 20, 32)
    ns.delete("d3")
    ns.delete("d10")
    c = ns.compact()
    ids, _, _ = c.live_items()
    assert ids == [f"d{i}" for i in range(20) if i not in (3, 10)]
    assert c.stats().tombstones == 0


def test_insert_codes_checks_padding():
    ns = Namespace("p", 8, QuantizerModel.sign(8))
    with pytest.raises(InvalidParams):
        ns.insert_codes(["a"], np.array([[1 << 9]], dtype=np.uint64))


def test_engine_registry():
    eng = Engine()
    eng.create_namespace("a", 8, QuantizerModel.sign(8))
    eng.insert("a", CorpusRecord("x", EmbeddingVector(np.ones(8))))
    assert eng.stats("a").live == 1
    resp = eng.search(SearchRequest("a", EmbeddingVector(np.ones(8)), top_k=1, query_id="q"))
    assert resp.ranked.query_id == "q" and resp.ranked.doc_ids == ["x"]
    eng.delete("a", "x")
    assert eng.stats("a").live == 0
    eng.drop_namespace("a")
    with pytest.raises(UnknownNamespace):
        eng.namespace("a")
