"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 1 runtime error. Data goes to stdout
(or the requested files), diagnostics to stderr.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys

import click

from . import __version__
from .engine import STAGES
from .errors import BitscanError, DimensionMismatch, InvalidParams
from .indexfile import load_index, save_index
from .ingest import (
    load_corpus_jsonl,
    load_qrels_jsonl,
    load_queries_jsonl,
    load_results_jsonl,
    result_line,
    write_corpus_jsonl,
    write_qrels_jsonl,
    write_queries_jsonl,
)
from .metrics import DEFAULT_KS, evaluate
from .synthetic import generate_synthetic
from .workflows import build_namespace, run_parity, run_queries, scaling_bench


def _int_list(value: str, name: str) -> list[int]:
    try:
        out = [int(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}", param_hint=name) from None
    if not out:
        raise click.BadParameter("must not be empty", param_hint=name)
    return out


def _parse_filters(items: tuple[str, ...]) -> dict[str, str]:
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"expected key=value, got {item!r}", param_hint="--filter")
        out[key] = val
    return out


def _emit(path: str | None, text: str) -> None:
    if path is None or path == "-":
        click.echo(text, nl=False)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except BitscanError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(1)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(1)


@click.group(cls=_Group)
@click.version_option(__version__, prog_name="bitscan")
def cli() -> None:
    """Index-free binary vector search and evaluation."""


@cli.command("build")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(["sign", "mib"]), default="mib", show_default=True)
@click.option("--dim", type=int, default=None, help="Expected vector dimension (checked against the corpus).")
def cmd_build(corpus_path, out_path, mode, dim):
    """Calibrate, binarize and write an index file."""
    corpus = load_corpus_jsonl(corpus_path)
    if not corpus:
        raise InvalidParams("corpus is empty")
    if dim is not None and corpus[0].vector.dim != dim:
        raise DimensionMismatch(corpus[0].vector.dim, dim)
    ns, timings = build_namespace(corpus, mode, os.path.splitext(os.path.basename(out_path))[0] or "default")
    save_index(ns, out_path)
    stats = ns.stats()
    click.echo(
        _csv(
            ["index", "mode", "dim", "docs", "code_bytes", "compression_ratio", "create_ms", "insert_ms"],
            [[out_path, mode, ns.dim, stats.live, stats.code_bytes, stats.compression_ratio,
              f"{timings.create_ms:.3f}", f"{timings.insert_ms:.3f}"]],
        ),
        nl=False,
    )


@cli.command("search")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--queries", "queries_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--top-k", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--scoring", type=click.Choice(["hamming", "its"]), default="its", show_default=True)
@click.option("--filter", "filters", multiple=True, metavar="KEY=VALUE", help="Metadata equality constraint.")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False), help="Results JSONL (default stdout).")
@click.option("--timings", "timings_path", default=None, type=click.Path(dir_okay=False), help="Per-query stage timing CSV.")
@click.option("--inline-timings", is_flag=True, help="Also embed stage timings in each result line.")
def cmd_search(index_path, queries_path, top_k, scoring, filters, out_path, timings_path, inline_timings):
    """Search every query against an index."""
    ns = load_index(index_path)
    queries = load_queries_jsonl(queries_path)
    responses = run_queries(ns, queries, top_k, "its" if scoring == "its" else "hamming_only", _parse_filters(filters))
    lines = []
    for resp in responses:
        lines.append(result_line(resp.ranked, resp.timings.as_dict() if inline_timings else None) + "\n")
    _emit(out_path, "".join(lines))
    if timings_path:
        rows = [[r.ranked.query_id, *(f"{v:.6f}" for v in r.timings.as_dict().values()), f"{r.timings.total:.6f}"]
                for r in responses]
        _emit(timings_path, _csv(["qid", *STAGES, "total"], rows))


@cli.command("eval")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--qrels", "qrels_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k-list", default=",".join(map(str, DEFAULT_KS)), show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False), help="CSV path (default stdout).")
@click.option("--dataset", default="", help="Dataset label for the report rows.")
@click.option("--platform", default="bitscan", show_default=True)
@click.option("--plot-dir", default=None, type=click.Path(file_okay=False), help="Write a metrics figure here.")
def cmd_eval(results_path, qrels_path, k_list, out_path, dataset, platform, plot_dir):
    """Score a results file against graded judgments."""
    ks = _int_list(k_list, "--k-list")
    if any(k < 1 for k in ks):
        raise click.BadParameter("cutoffs must be >= 1", param_hint="--k-list")
    results = load_results_jsonl(results_path)
    qrels = load_qrels_jsonl(qrels_path)
    known = set(qrels.query_ids())
    for r in results:
        if r.query_id not in known:
            click.echo(f"warning: qid {r.query_id!r} has no judgments; scored as 0", err=True)
    report = evaluate(results, qrels, ks, dataset or os.path.splitext(os.path.basename(results_path))[0], platform)
    _emit(out_path, report.to_csv())
    if out_path is not None and out_path != "-":
        click.echo(report.to_table(), nl=False)
    if plot_dir:
        from .plotting import plot_metrics

        fig = plot_metrics(report, os.path.join(plot_dir, "metrics.png"))
        click.echo(f"figure: {fig}", err=True)


@cli.command("bench")
@click.option("--sizes", required=True, help="Ascending comma-separated corpus sizes.")
@click.option("--dim", type=click.IntRange(min=1), default=1536, show_default=True)
@click.option("--repeat", type=click.IntRange(min=1), default=50, show_default=True, help="Timed queries per size.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--insert-samples", type=click.IntRange(min=0), default=200, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False), help="Latency CSV (default stdout).")
@click.option("--plot-dir", default=None, type=click.Path(file_okay=False), help="Write a scaling figure here.")
def cmd_bench(sizes, dim, repeat, seed, insert_samples, out_path, plot_dir):
    """Measure per-stage latency as the scanned corpus grows."""
    report = scaling_bench(_int_list(sizes, "--sizes"), dim, repeat, seed, insert_samples)
    rows = []
    for size, summ in sorted(report.summaries.items()):
        for stage, s in summ.rows():
            rows.append([size, stage, summ.count, *(f"{v:.6f}" for v in (s.mean, s.median, s.min, s.max, s.std))])
    _emit(out_path, _csv(["size", "stage", "queries", "mean_ms", "median_ms", "min_ms", "max_ms", "std_ms"], rows))
    for a, b, ratio in report.distance_ratios():
        click.echo(f"distance-stage ratio {b}/{a}: {ratio:.3f} (size ratio {b / a:.3f})", err=True)
    if report.insert_median_ms:
        for size, ms in sorted(report.insert_median_ms.items()):
            click.echo(f"median insert latency at {size}: {ms * 1e3:.2f} us", err=True)
        click.echo(f"insert latency ratio largest/smallest: {report.insert_ratio():.3f}", err=True)
    if plot_dir:
        from .plotting import plot_scaling

        fig = plot_scaling(report.summaries, os.path.join(plot_dir, "scaling.png"))
        click.echo(f"figure: {fig}", err=True)


@cli.command("parity")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--queries", "queries_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--qrels", "qrels_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", "modes", type=click.Choice(["sign", "mib"]), multiple=True, help="Repeatable; default both.")
@click.option("--scoring", type=click.Choice(["hamming", "its"]), default="its", show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
@click.option("--plot-dir", default=None, type=click.Path(file_okay=False))
def cmd_parity(corpus_path, queries_path, qrels_path, modes, scoring, out_path, plot_dir):
    """Compare binary retrieval against the exact cosine oracle."""
    corpus = load_corpus_jsonl(corpus_path)
    queries = load_queries_jsonl(queries_path)
    qrels = load_qrels_jsonl(qrels_path)
    rows = run_parity(corpus, queries, qrels, modes or ("sign", "mib"), "its" if scoring == "its" else "hamming_only")
    header = list(rows[0]) if rows else []
    _emit(out_path, _csv(header, [[r[h] if h == "mode" else repr(float(r[h])) for h in header] for r in rows]))
    if plot_dir and rows:
        from .plotting import plot_parity

        fig = plot_parity(rows, os.path.join(plot_dir, "parity.png"))
        click.echo(f"figure: {fig}", err=True)


@cli.command("generate")
@click.option("--clusters", type=int, default=10, show_default=True)
@click.option("--per-cluster", type=int, default=1000, show_default=True)
@click.option("--dim", type=int, default=1536, show_default=True)
@click.option("--spread", type=float, default=0.1, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def cmd_generate(clusters, per_cluster, dim, spread, seed, out_dir):
    """Write a seeded synthetic corpus, queries and qrels as JSONL."""
    data = generate_synthetic(clusters, per_cluster, dim, spread, seed)
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, f"{name}.jsonl") for name in ("corpus", "queries", "qrels")}
    write_corpus_jsonl(paths["corpus"], data.corpus)
    write_queries_jsonl(paths["queries"], data.queries)
    write_qrels_jsonl(paths["qrels"], data.qrels)
    click.echo(json.dumps(paths, sort_keys=True))


@cli.command("compact")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False), help="Defaults to rewriting in place.")
@click.option("--drop", "drop_ids", multiple=True, help="Doc id to delete before compacting (repeatable).")
def cmd_compact(index_path, out_path, drop_ids):
    """Delete documents offline and rewrite the index densely."""
    ns = load_index(index_path)
    for doc_id in drop_ids:
        ns.delete(doc_id)
    before = ns.stats()
    save_index(ns, out_path or index_path)
    click.echo(_csv(["index", "live", "dropped"], [[out_path or index_path, before.live, before.tombstones]]), nl=False)


@cli.command("stats")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
def cmd_stats(index_path):
    """Report document counts and storage sizes of an index."""
    ns = load_index(index_path)
    s = ns.stats().as_dict()
    click.echo(_csv(["mode", "dim", *s], [[ns.quantizer.mode, ns.dim, *s.values()]]), nl=False)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="bitscan", standalone_mode=True)
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
