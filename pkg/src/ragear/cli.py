"""Operator command line: offline pipeline stages and the eval protocol.

Exit codes: 0 success, 2 usage/config error, 1 runtime failure.
Diagnostics go to stderr; data to stdout or the named output files.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import metrics as m
from .embed import EmbedderConfig, EmbedError, make_embedder, read_embeddings, write_embeddings
from .ingest import ChunkingConfig, IngestError, ingest_corpus, read_chunks_jsonl
from .kg import CatalogueError, ConstraintSet, UnknownConstraintError, load_catalogue
from .pipeline import Pipeline, PipelineConfig
from .scoring import course_metadata_text, write_run


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_embedder_config(conf: str | None, dim: int, kind: str) -> EmbedderConfig:
    if conf:
        try:
            raw = json.loads(Path(conf).read_text(encoding="utf-8"))
            return EmbedderConfig(**raw)
        except (OSError, ValueError, TypeError) as exc:
            _fail(f"bad embedder config {conf}: {exc}", 2)
    return EmbedderConfig(kind=kind, dim=dim)


@click.group()
def main():
    """Course recommendation over lecture-transcript evidence."""


@main.command("ingest")
@click.option("--transcripts", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path())
@click.option("--min-chars", default=200, show_default=True)
@click.option("--target-chars", default=600, show_default=True)
@click.option("--max-chars", default=1200, show_default=True)
def ingest_cmd(transcripts, out, min_chars, target_chars, max_chars):
    """Chunk word-timestamped transcripts into a chunks JSONL file."""
    try:
        cfg = ChunkingConfig(min_chars, target_chars, max_chars)
    except ValueError as exc:
        _fail(str(exc), 2)
    try:
        stats = ingest_corpus(transcripts, out, cfg)
    except IngestError as exc:
        _fail(str(exc), 1)
    click.echo(json.dumps(stats.to_dict()))


def _embed_items(items, embedder, out, dim, kind_label):
    """Embed (id, text) pairs, resuming over ids already in the out file."""
    existing = {}
    out_path = Path(out)
    if out_path.exists() and out_path.stat().st_size > 0:
        try:
            file_dim, _, existing = read_embeddings(out_path)
        except EmbedError as exc:
            _fail(f"cannot resume {out}: {exc}", 1)
        if file_dim != dim:
            _fail(f"existing file dim {file_dim} != configured {dim}", 2)
    todo = [(i, t) for i, t in items if i not in existing]
    new_vectors = {}
    if todo:
        vecs = embedder.embed_passages([t for _, t in todo])
        new_vectors = {i: v for (i, _), v in zip(todo, vecs)}
    merged = {**existing, **new_vectors}
    write_embeddings(out_path, dim, kind_label, sorted(merged.items()))
    click.echo(
        json.dumps({"embedded": len(todo), "skipped": len(existing), "total": len(merged)})
    )


@main.command("embed")
@click.option("--chunks", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--embedder", "embedder_conf", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path())
@click.option("--dim", default=256, show_default=True)
@click.option("--kind", default="test", show_default=True)
def embed_cmd(chunks, embedder_conf, out, dim, kind):
    """Embed chunk texts into an embedding JSONL file (resumable)."""
    cfg = _load_embedder_config(embedder_conf, dim, kind)
    try:
        rows = read_chunks_jsonl(chunks)
        embedder = make_embedder(cfg)
        _embed_items(
            [(c.chunk_id, c.text) for c in rows], embedder, out, cfg.dim, "passage"
        )
    except (EmbedError, OSError, ValueError, KeyError) as exc:
        _fail(str(exc), 1)


@main.command("embed-metadata")
@click.option("--catalogue", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--embedder", "embedder_conf", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path())
@click.option("--dim", default=256, show_default=True)
@click.option("--kind", default="test", show_default=True)
def embed_metadata_cmd(catalogue, embedder_conf, out, dim, kind):
    """Embed course metadata texts for the metadata-only baseline."""
    cfg = _load_embedder_config(embedder_conf, dim, kind)
    try:
        store = load_catalogue(catalogue)
        embedder = make_embedder(cfg)
        items = [
            (cid, course_metadata_text(store.courses[cid]))
            for cid in sorted(store.courses)
        ]
        _embed_items(items, embedder, out, cfg.dim, "metadata")
    except CatalogueError as exc:
        _fail(str(exc), 2)
    except (EmbedError, OSError) as exc:
        _fail(str(exc), 1)


def _parse_filters(filters) -> ConstraintSet:
    data = {}
    for item in filters:
        if "=" not in item:
            _fail(f"bad --filter {item!r}, expected key=value", 2)
        key, value = item.split("=", 1)
        if key in {"max_credits", "min_credits"}:
            data[key] = int(value)
        elif key == "require_prerequisites_met":
            data[key] = value.lower() in {"1", "true", "yes"}
        elif key == "completed_course_ids":
            data[key] = set(value.split(","))
        elif key in {"plan_id", "discipline"}:
            data[key] = value
        else:
            _fail(f"unknown filter key {key!r}", 2)
    try:
        return ConstraintSet.from_dict(data)
    except ValueError as exc:
        _fail(str(exc), 2)


@main.command("query")
@click.option("--catalogue", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--chunks", type=click.Path(exists=True, dir_okay=False))
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False))
@click.option("--metadata-embeddings", type=click.Path(exists=True, dir_okay=False))
@click.option("--text", required=True)
@click.option("--method", default="ragear", show_default=True,
              type=click.Choice(["ragear", "sump", "metadata"]))
@click.option("--k", default=200, show_default=True)
@click.option("--t-q", "t_q", type=int)
@click.option("--top-n", default=3, show_default=True)
@click.option("--dim", default=256, show_default=True)
@click.option("--filter", "filters", multiple=True,
              help="constraint as key=value, repeatable")
@click.option("--run-out", type=click.Path(), help="append the ranking as a TSV run file")
def query_cmd(catalogue, chunks, embeddings, metadata_embeddings, text, method,
              k, t_q, top_n, dim, filters, run_out):
    """Run the full pipeline for one query and print ranked courses."""
    constraints = _parse_filters(filters)
    config = PipelineConfig(
        catalogue=catalogue,
        chunks=chunks,
        embeddings=embeddings,
        metadata_embeddings=metadata_embeddings,
        embedder=EmbedderConfig(kind="test", dim=dim),
        k=k,
    )
    try:
        pipeline = Pipeline.from_config(config)
    except CatalogueError as exc:
        _fail(str(exc), 2)
    except (EmbedError, OSError) as exc:
        _fail(str(exc), 1)
    try:
        result = pipeline.recommend(
            text, method=method, constraints=constraints, top_n=top_n, t_q=t_q
        )
    except UnknownConstraintError as exc:
        _fail(str(exc), 2)
    except (CatalogueError, EmbedError, ValueError) as exc:
        _fail(str(exc), 1)

    for pos, course in enumerate(result.courses, start=1):
        click.echo(f"{pos}. {course.course_id}  {course.title}  score={course.score:.6f}")
        if course.components:
            c = course.components
            click.echo(
                f"   GE={c.global_evidence:.6f} RE={c.ranked_evidence:.6f} "
                f"LC={c.lesson_coverage:.6f} RS={c.rs:.6f}"
            )
        for chunk in course.supporting_chunks:
            click.echo(
                f"   [{chunk['rank']}] {chunk['similarity']:.4f} "
                f"{chunk['lesson_title']} {chunk['start_s']:.1f}-{chunk['end_s']:.1f}s"
            )
    if result.note:
        click.echo(f"note: {result.note}")
    if run_out:
        ranking, _, _, _ = pipeline.rank(text, method, constraints, t_q, k)
        with open(run_out, "a", encoding="utf-8") as f:
            write_run(f, [ranking])


@main.command("eval")
@click.option("--runs", required=True, multiple=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--qrels", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--baseline", required=True)
@click.option("--threshold", default=3, show_default=True)
@click.option("--cutoffs", default="1,3,5", show_default=True)
@click.option("--json-out", "json_out", type=click.Path())
def eval_cmd(runs, qrels, baseline, threshold, cutoffs, json_out):
    """Compare run files against graded judgments."""
    try:
        cfg = m.EvalConfig(
            relevance_threshold=threshold,
            cutoffs=tuple(int(c) for c in cutoffs.split(",")),
        )
    except ValueError as exc:
        _fail(str(exc), 2)
    run_map = {}
    from .scoring import read_run

    for path in runs:
        name = Path(path).stem
        try:
            with open(path, encoding="utf-8") as f:
                run_map[name] = read_run(f)
        except (OSError, ValueError) as exc:
            _fail(f"{path}: {exc}", 1)
    if baseline not in run_map:
        _fail(f"baseline {baseline!r} not among runs {sorted(run_map)}", 2)
    try:
        with open(qrels, encoding="utf-8") as f:
            judgments = m.read_qrels(f)
        report = m.compare_methods(run_map, judgments, cfg, baseline)
    except ValueError as exc:
        _fail(str(exc), 2)
    click.echo(m.render_report_table(report, cfg))
    if json_out:
        Path(json_out).write_text(json.dumps(report.to_dict(), indent=2))


@main.command("agree")
@click.option("--left", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--right", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--rbo-p", default=0.9, show_default=True)
@click.option("--threshold", default=3, show_default=True)
def agree_cmd(left, right, rbo_p, threshold):
    """Agreement metrics between two qrels files."""
    try:
        cfg = m.EvalConfig(relevance_threshold=threshold, rbo_p=rbo_p)
    except ValueError as exc:
        _fail(str(exc), 2)
    try:
        with open(left, encoding="utf-8") as f:
            j1 = m.read_qrels(f)
        with open(right, encoding="utf-8") as f:
            j2 = m.read_qrels(f)
        report = m.agreement(j1, j2, cfg)
    except ValueError as exc:
        _fail(str(exc), 2)
    click.echo(f"queries: {report.n_queries}")
    for label, (mean, std) in [
        ("Kendall's tau", report.kendall),
        ("Spearman's rho", report.spearman),
        ("RBO", report.rbo),
        ("Jaccard", report.jaccard),
    ]:
        click.echo(f"{label:<15} {mean:.4f} +/- {std:.4f}")


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path())
def serve_cmd(config_path):
    """Start the HTTP recommendation service."""
    import errno

    import uvicorn

    from .service import create_app, mount_static

    if not Path(config_path).exists():
        _fail(f"config file not found: {config_path}", 2)
    try:
        config = PipelineConfig.from_file(config_path)
        pipeline = Pipeline.from_config(config)
    except (CatalogueError, EmbedError, ValueError, OSError, TypeError) as exc:
        _fail(f"bad config: {exc}", 2)
    app = create_app(pipeline)
    if config.static_dir:
        mount_static(app, config.static_dir)
    click.echo(f"ready on {config.host}:{config.port}", err=True)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            _fail(f"port {config.port} already in use", 2)
        _fail(str(exc), 1)


if __name__ == "__main__":
    main()
