"""Graded-relevance ranking metrics and latency statistics.

Gains are exponential, ``2**rel - 1``, with logarithmic discount
``log2(rank + 1)``. Unjudged documents have grade 0. A document counts as
relevant for precision, recall and AP when its grade is positive.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import RankedList, RelevanceJudgments
from .engine import STAGES, StageTimings
from .errors import EmptySamples, InvalidParams

DEFAULT_KS = (1, 3, 5, 10, 100)
METRICS = ("ndcg", "map", "recall", "precision")


def _check_k(k: int) -> None:
    if k < 1:
        raise InvalidParams(f"k must be >= 1, got {k}")


def _grades(ranked: RankedList, qrels: RelevanceJudgments, k: int) -> list[int]:
    return [qrels.grade(ranked.query_id, d) for d in ranked.doc_ids[:k]]


def _dcg(grades: Iterable[int]) -> float:
    return math.fsum((2.0**g - 1.0) / math.log2(i + 2) for i, g in enumerate(grades))


def dcg_at_k(ranked: RankedList, qrels: RelevanceJudgments, k: int) -> float:
    _check_k(k)
    return _dcg(_grades(ranked, qrels, k))


def idcg_at_k(grades: Mapping[str, int] | Iterable[int], k: int) -> float:
    """DCG of the ideal ordering of a query's judged grades."""
    _check_k(k)
    values = grades.values() if isinstance(grades, Mapping) else grades
    return _dcg(sorted(values, reverse=True)[:k])


def ndcg_at_k(ranked: RankedList, qrels: RelevanceJudgments, k: int) -> float:
    """``dcg / idcg``; 0.0 when the query has no positive judgment."""
    ideal = idcg_at_k(qrels.for_query(ranked.query_id), k)
    if ideal == 0.0:
        return 0.0
    return dcg_at_k(ranked, qrels, k) / ideal


def precision_recall_map(ranked: RankedList, qrels: RelevanceJudgments, k: int) -> tuple[float, float, float]:
    _check_k(k)
    total = sum(1 for g in qrels.for_query(ranked.query_id).values() if g > 0)
    hits = 0
    precision_sum = 0.0
    for i, g in enumerate(_grades(ranked, qrels, k), start=1):
        if g > 0:
            hits += 1
            precision_sum += hits / i
    precision = hits / k
    recall = hits / total if total else 0.0
    ap = precision_sum / min(total, k) if total else 0.0
    return precision, recall, ap


@dataclass
class MetricReport:
    """Per-query metric values and their means.

    ``per_query[qid][(metric, k)]``; queries with no judgments score 0 and
    still count toward the means.
    """

    ks: tuple[int, ...]
    per_query: dict[str, dict[tuple[str, int], float]] = field(default_factory=dict)
    dataset: str = ""
    platform: str = ""

    def mean(self, metric: str, k: int) -> float:
        if not self.per_query:
            return 0.0
        return math.fsum(v[(metric, k)] for v in self.per_query.values()) / len(self.per_query)

    def means(self) -> dict[tuple[str, int], float]:
        return {(m, k): self.mean(m, k) for m in METRICS for k in self.ks}

    def rows(self, per_query: bool = True) -> list[tuple]:
        """``(dataset, platform, metric, k, value, qid)`` rows; mean rows use qid ``all``."""
        out = []
        if per_query:
            for qid, vals in self.per_query.items():
                for m in METRICS:
                    for k in self.ks:
                        out.append((self.dataset, self.platform, m, k, vals[(m, k)], qid))
        for (m, k), v in self.means().items():
            out.append((self.dataset, self.platform, m, k, v, "all"))
        return out

    def to_csv(self, per_query: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "platform", "metric", "k", "value", "qid"])
        for row in self.rows(per_query):
            w.writerow([*row[:4], repr(float(row[4])), row[5]])
        return buf.getvalue()

    def to_table(self) -> str:
        """Aligned text table of the mean rows."""
        header = ("dataset", "platform", "metric", "k", "value")
        body = [(d, p, m, str(k), f"{v:.4f}") for d, p, m, k, v, _ in self.rows(per_query=False)]
        widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header, *body]]
        return "\n".join(lines) + "\n"


def evaluate(
    runs: Mapping[str, RankedList] | Iterable[RankedList],
    qrels: RelevanceJudgments,
    ks: Sequence[int] = DEFAULT_KS,
    dataset: str = "",
    platform: str = "",
) -> MetricReport:
    lists = list(runs.values()) if isinstance(runs, Mapping) else list(runs)
    report = MetricReport(tuple(ks), {}, dataset, platform)
    for ranked in lists:
        vals: dict[tuple[str, int], float] = {}
        for k in ks:
            p, r, ap = precision_recall_map(ranked, qrels, k)
            vals[("ndcg", k)] = ndcg_at_k(ranked, qrels, k)
            vals[("map", k)] = ap
            vals[("recall", k)] = r
            vals[("precision", k)] = p
        report.per_query[ranked.query_id] = vals
    return report


@dataclass(frozen=True)
class Summary:
    mean: float
    median: float
    min: float
    max: float
    std: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "Summary":
        a = np.asarray(values, dtype=np.float64)
        if a.size == 0:
            raise EmptySamples("no samples to summarize")
        return cls(float(a.mean()), float(np.median(a)), float(a.min()), float(a.max()), float(a.std()))


@dataclass(frozen=True)
class LatencySummary:
    stages: dict[str, Summary]
    total: Summary
    count: int

    def rows(self) -> list[tuple[str, Summary]]:
        return [*self.stages.items(), ("total", self.total)]


def latency_summary(samples: Sequence[StageTimings]) -> LatencySummary:
    """Mean, median, min, max and population std per stage and for the total."""
    if not samples:
        raise EmptySamples("latency_summary needs at least one sample")
    stages = {name: Summary.of([getattr(s, name) for s in samples]) for name in STAGES}
    return LatencySummary(stages, Summary.of([s.total for s in samples]), len(samples))
