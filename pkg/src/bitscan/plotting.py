"""Static figures written next to the CSV reports."""

from __future__ import annotations

import math
import os
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .engine import STAGES  # noqa: E402
from .metrics import METRICS, LatencySummary, MetricReport  # noqa: E402


def report_figure(width: float = 7.0, height: float | None = None, ncols: int = 1):
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    if height is None:
        height = width * golden_ratio / max(ncols, 1) * 1.2
    fig, axes = plt.subplots(1, ncols, figsize=(width, height), facecolor="w")
    return fig, axes


def _save(fig, path: str | os.PathLike) -> str:
    os.makedirs(os.path.dirname(os.fspath(path)) or ".", exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return os.fspath(path)


def plot_scaling(summaries: Mapping[int, LatencySummary], path: str | os.PathLike) -> str:
    """Distance-stage mean against corpus size, plus the per-stage breakdown."""
    sizes = sorted(summaries)
    fig, (ax, ax2) = report_figure(11.0, 4.2, ncols=2)

    dist = [summaries[n].stages["calculate_distance"].mean for n in sizes]
    ax.loglog(sizes, dist, "o-", label="calculate_distance (mean)")
    if dist[0] > 0:
        ax.loglog(sizes, [dist[0] * n / sizes[0] for n in sizes], "k--", lw=0.8, label="linear reference")
    ax.set_xlabel("codes scanned")
    ax.set_ylabel("ms")
    ax.set_title("Exhaustive scan cost")
    ax.legend(frameon=False, fontsize=8)

    bottom = [0.0] * len(sizes)
    labels = [str(n) for n in sizes]
    cmap = plt.get_cmap("tab20")
    for i, stage in enumerate(STAGES):
        vals = [summaries[n].stages[stage].mean for n in sizes]
        ax2.bar(labels, vals, bottom=bottom, color=cmap(i), label=stage)
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax2.set_xlabel("codes")
    ax2.set_ylabel("mean ms per query")
    ax2.set_title("Pipeline stages")
    ax2.legend(frameon=False, fontsize=6, ncol=2)
    return _save(fig, path)


def plot_parity(rows: Sequence[Mapping[str, float | str]], path: str | os.PathLike) -> str:
    """Grouped bars: NDCG@10 of the oracle and each binary mode, and recall vs oracle."""
    fig, (ax, ax2) = report_figure(9.0, 3.6, ncols=2)
    names = ["oracle"] + [str(r["mode"]) for r in rows]
    ndcg = [float(rows[0]["oracle_ndcg@10"])] + [float(r["binary_ndcg@10"]) for r in rows]
    ax.bar(names, ndcg, color=["0.4"] + ["C0"] * len(rows))
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("NDCG@10")
    ax.set_title("Retrieval quality")
    ax2.bar([str(r["mode"]) for r in rows], [float(r["recall_vs_oracle@100"]) for r in rows], color="C1")
    ax2.set_ylim(0, 1.05)
    ax2.set_ylabel("recall vs oracle @100")
    ax2.set_title("Overlap with exact cosine top-100")
    return _save(fig, path)


def plot_metrics(report: MetricReport, path: str | os.PathLike) -> str:
    """Mean value of every metric across the evaluated cutoffs."""
    fig, ax = report_figure(6.0)
    for m in METRICS:
        ax.plot(report.ks, [report.mean(m, k) for k in report.ks], "o-", label=m)
    ax.set_xscale("log")
    ax.set_xticks(report.ks)
    ax.set_xticklabels([str(k) for k in report.ks])
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("k")
    ax.set_ylabel("mean over queries")
    title = " / ".join(x for x in (report.dataset, report.platform) if x)
    ax.set_title(title or "Ranking metrics")
    ax.legend(frameon=False)
    return _save(fig, path)
