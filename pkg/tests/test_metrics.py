import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bitscan.core import RankedList, RelevanceJudgments, ScoredHit
from bitscan.engine import StageTimings
from bitscan.errors import EmptySamples
from bitscan.metrics import (
    dcg_at_k,
    evaluate,
    idcg_at_k,
    latency_summary,
    ndcg_at_k,
    precision_recall_map,
)

from oracles import brute_metrics

# frozen from an independent script evaluation of the graded-gain formulas
DCG_201 = 3.5
IDCG_21 = 3.6309297535714578
NDCG_201 = 0.9639404333166532


def ranked(ids, qid="q"):
    return RankedList(qid, tuple(ScoredHit(d, 0.0, 0) for d in ids), len(ids))


def test_dcg_hand_example():
    qrels = RelevanceJudgments({("q", "a"): 2, ("q", "c"): 1})
    assert dcg_at_k(ranked(["a", "b", "c"]), qrels, 3) == pytest.approx(DCG_201, abs=1e-9)
    assert 3 / 1 + 0 + 1 / 2 == DCG_201


def test_dcg_unjudged_and_single():
    assert dcg_at_k(ranked(["x", "y"]), RelevanceJudgments(), 10) == 0.0
    assert dcg_at_k(ranked(["a"]), RelevanceJudgments({("q", "a"): 1}), 1) == 1.0


def test_idcg_examples():
    assert idcg_at_k([2, 1], 3) == pytest.approx(IDCG_21, abs=1e-9)
    assert idcg_at_k([2, 1], 3) == pytest.approx(3.630930, abs=1e-6)
    assert idcg_at_k([], 3) == 0.0
    assert idcg_at_k({"a": 1}, 1) == 1.0


def test_ndcg_examples():
    qrels = RelevanceJudgments({("q", "a"): 2, ("q", "c"): 1})
    assert ndcg_at_k(ranked(["a", "b", "c"]), qrels, 3) == pytest.approx(NDCG_201, abs=1e-9)
    assert ndcg_at_k(ranked(["a", "b", "c"]), qrels, 3) == pytest.approx(0.963940, abs=1e-6)
    assert ndcg_at_k(ranked(["a", "c", "b"]), qrels, 3) == 1.0
    assert ndcg_at_k(ranked(["a", "c"]), RelevanceJudgments(), 3) == 0.0


def test_precision_recall_ap_example():
    qrels = RelevanceJudgments({("q", "a"): 1, ("q", "c"): 1})
    p, r, ap = precision_recall_map(ranked(["a", "b", "c"]), qrels, 3)
    assert p == pytest.approx(2 / 3, abs=1e-12)
    assert r == 1.0
    assert ap == pytest.approx((1 / 1 + 2 / 3) / 2, abs=1e-9)
    assert ap == pytest.approx(0.833333, abs=1e-6)


def test_precision_recall_ap_edges():
    qrels = RelevanceJudgments({("q", "z"): 1})
    assert precision_recall_map(ranked(["a", "b"]), qrels, 2) == (0.0, 0.0, 0.0)
    qrels = RelevanceJudgments({("q", "a"): 1, ("q", "b"): 3})
    assert precision_recall_map(ranked(["a", "b"]), qrels, 2) == (1.0, 1.0, 1.0)


def random_instance(r):
    pool = [f"d{i}" for i in range(int(r.integers(1, 40)))]
    n_ranked = int(r.integers(0, len(pool) + 1))
    ids = list(r.permutation(pool)[:n_ranked])
    judged = {d: int(r.integers(0, 4)) for d in pool if r.random() < 0.5}
    return ids, judged


def test_against_brute_force_on_100_instances():
    r = np.random.default_rng(2024)
    for _ in range(100):
        ids, judged = random_instance(r)
        qrels = RelevanceJudgments({("q", d): g for d, g in judged.items()})
        for k in (1, 3, 5, 10, 100):
            ndcg, p, rec, ap = brute_metrics(ids, judged, k)
            got_p, got_r, got_ap = precision_recall_map(ranked(ids), qrels, k)
            assert abs(ndcg_at_k(ranked(ids), qrels, k) - ndcg) <= 1e-9
            assert abs(got_p - p) <= 1e-9
            assert abs(got_r - rec) <= 1e-9
            assert abs(got_ap - ap) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1, 3, 5, 10, 100]))
def test_bounds_and_integrality(seed, k):
    r = np.random.default_rng(seed)
    ids, judged = random_instance(r)
    qrels = RelevanceJudgments({("q", d): g for d, g in judged.items()})
    value = ndcg_at_k(ranked(ids), qrels, k)
    assert 0.0 <= value <= 1.0 + 1e-12
    p, rec, ap = precision_recall_map(ranked(ids), qrels, k)
    assert 0 <= p <= 1 and 0 <= rec <= 1 and 0 <= ap <= 1 + 1e-12
    total = sum(1 for g in judged.values() if g > 0)
    assert math.isclose(p * k, round(p * k), abs_tol=1e-9)
    if total:
        assert math.isclose(rec * total, round(rec * total), abs_tol=1e-9)
    ideal = sorted(judged, key=lambda d: -judged[d])
    if any(g > 0 for g in judged.values()):
        assert ndcg_at_k(ranked(ideal), qrels, k) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1, 3, 5, 10]))
def test_swap_toward_ideal_never_hurts(seed, k):
    r = np.random.default_rng(seed)
    ids, judged = random_instance(r)
    if len(ids) < 2:
        return
    qrels = RelevanceJudgments({("q", d): g for d, g in judged.items()})
    i, j = sorted(r.choice(len(ids), 2, replace=False).tolist())
    if judged.get(ids[i], 0) < judged.get(ids[j], 0):
        swapped = list(ids)
        swapped[i], swapped[j] = swapped[j], swapped[i]
        assert ndcg_at_k(ranked(swapped), qrels, k) >= ndcg_at_k(ranked(ids), qrels, k) - 1e-12


def test_evaluate_counts_unjudged_queries_as_zero():
    qrels = RelevanceJudgments({("q1", "a"): 1})
    report = evaluate([ranked(["a"], "q1"), ranked(["a"], "q2")], qrels, ks=(1, 10))
    assert report.per_query["q1"][("ndcg", 1)] == 1.0
    assert report.per_query["q2"][("ndcg", 1)] == 0.0
    assert report.mean("ndcg", 1) == 0.5


def test_report_csv_and_table():
    qrels = RelevanceJudgments({("q1", "a"): 1})
    report = evaluate([ranked(["a"], "q1")], qrels, ks=(1, 3), dataset="toy", platform="bitscan")
    lines = report.to_csv().splitlines()
    assert lines[0] == "dataset,platform,metric,k,value,qid"
    assert "toy,bitscan,ndcg,1,1.0,q1" in lines
    assert "toy,bitscan,ndcg,1,1.0,all" in lines
    table = report.to_table()
    assert table.splitlines()[0].split() == ["dataset", "platform", "metric", "k", "value"]
    assert len(table.splitlines()) == 1 + 4 * 2


def timings_with_total(values):
    return [StageTimings(calculate_distance=v) for v in values]


def test_latency_summary_examples():
    s = latency_summary(timings_with_total([1.0, 2.0, 3.0]))
    assert (s.total.mean, s.total.median) == (2.0, 2.0)
    assert s.total.std == pytest.approx(0.816497, abs=1e-6)
    assert s.total.std == pytest.approx(0.816496580927726, abs=1e-12)
    one = latency_summary(timings_with_total([4.0])).total
    assert one.min == one.max == one.mean == one.median == 4.0 and one.std == 0.0
    assert latency_summary(timings_with_total([1.0, 3.0])).total.median == 2.0
    with pytest.raises(EmptySamples):
        latency_summary([])


def test_latency_summary_ordering(rng):
    s = latency_summary(timings_with_total(rng.random(31).tolist()))
    for _, summ in s.rows():
        assert summ.min <= summ.median <= summ.max and summ.std >= 0
