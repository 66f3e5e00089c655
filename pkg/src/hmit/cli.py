"""Command line front end.

Every verb is a thin wrapper over :class:`hmit.service.ServiceState` (or the
evaluation helpers), so the CLI and the HTTP service share one behavior. The
store location comes from ``--data-dir`` or the HMIT_DATA_DIR variable.
"""

import json
import os
from pathlib import Path

import click

from .backends import BackendError, backends_for_config
from .codes import AnnotationError, registry
from .config import ConfigError, load_pipeline_config
from .corpus import CorpusError, corpus_stats, load_corpus, render_stats_table
from .evaluation import (
    EvaluationError,
    builtin_config_grid,
    builtin_overlap_adapter,
    load_config_rows,
    matrix_report_text,
    read_eval_sheet,
    read_mapping,
    render_eval_table,
    run_config_matrix,
    score_eval_sheet,
    write_matrix_records,
)
from .service import (
    ConflictError,
    InvalidRequestError,
    NotFoundError,
    ServiceState,
    create_app,
)

_ERRORS = (
    AnnotationError,
    BackendError,
    ConfigError,
    ConflictError,
    CorpusError,
    EvaluationError,
    InvalidRequestError,
    NotFoundError,
)


def _state(ctx: click.Context) -> ServiceState:
    return ServiceState(ctx.obj["data_dir"], env=dict(os.environ))


def _load_json(path: str) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


@click.group()
@click.option(
    "--data-dir",
    type=click.Path(path_type=Path),
    default=lambda: os.environ.get("HMIT_DATA_DIR", "hmit-data"),
    show_default="hmit-data",
    help="Directory holding document and memory stores.",
)
@click.pass_context
def main(ctx: click.Context, data_dir: Path) -> None:
    """Interactive translation workbench for bilingual legal judgments."""
    ctx.ensure_object(dict)
    ctx.obj["data_dir"] = data_dir


@main.command()
@click.argument("corpus", type=click.Path(exists=True, path_type=Path))
@click.pass_context
def ingest(ctx: click.Context, corpus: Path) -> None:
    """Load aligned segments into the document store and translation memory."""
    try:
        added, skipped = _state(ctx).ingest_corpus(corpus)
    except _ERRORS as exc:
        raise click.ClickException(str(exc))
    click.echo(f"added {added} segments, skipped {skipped} already present")


@main.command()
@click.pass_context
def docs(ctx: click.Context) -> None:
    """List stored documents with segment and edit counts."""
    for doc in _state(ctx).list_documents():
        click.echo(
            f"{doc['doc_id']}  segments={doc['segments']}  edited={doc['edited']}"
        )


@main.command()
@click.argument("corpus", type=click.Path(exists=True, path_type=Path))
def stats(corpus: Path) -> None:
    """Print the per-year corpus statistics table."""
    try:
        segments = load_corpus(corpus)
    except CorpusError as exc:
        raise click.ClickException(str(exc))
    click.echo(render_stats_table(corpus_stats(segments)))


@main.command()
def codes() -> None:
    """List the proofreading error codes."""
    for spec in registry():
        click.echo(f"{spec.code:4} {spec.category.value:10} {spec.description}")


@main.command()
@click.argument("doc_id")
@click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(exists=True, path_type=Path),
    help="Pipeline configuration JSON.",
)
@click.option(
    "--segments",
    default=None,
    help="Comma separated segment ids; all segments when omitted.",
)
@click.option(
    "--manual",
    "manual_path",
    default=None,
    type=click.Path(exists=True, path_type=Path),
    help="JSON file of manual annotation lines keyed by segment id.",
)
@click.option("--timeout", default=600.0, show_default=True)
@click.pass_context
def run(
    ctx: click.Context,
    doc_id: str,
    config_path: Path,
    segments: str | None,
    manual_path: Path | None,
    timeout: float,
) -> None:
    """Run the translate-annotate-proofread pipeline over a document."""
    state = _state(ctx)
    seg_ids = None
    if segments:
        seg_ids = [int(part) for part in segments.split(",") if part.strip()]
    manual = None
    if manual_path:
        manual = {int(k): v for k, v in _load_json(str(manual_path)).items()}
    try:
        config = load_pipeline_config(config_path)
        job = state.start_run(
            doc_id, config, seg_ids=seg_ids, manual_annotations=manual
        )
        job = state.wait(job.job_id, timeout=timeout)
    except _ERRORS as exc:
        raise click.ClickException(str(exc))
    click.echo(f"job {job.job_id} [{job.config_summary}] {job.state}")
    click.echo(f"done {job.done}/{job.total}, failed {job.failed_segments}")
    if job.state == "failed":
        raise click.ClickException(job.error or "run failed")


@main.command()
@click.argument("job_id")
@click.pass_context
def cost(ctx: click.Context, job_id: str) -> None:
    """Show the usage cost summary for a finished run."""
    try:
        summary = _state(ctx).run_cost(job_id)
    except _ERRORS as exc:
        raise click.ClickException(str(exc))
    click.echo(f"source words: {summary['source_words']}")
    for role, amount in summary["api_per_role"].items():
        click.echo(f"{role:12} USD {amount}")
    click.echo(f"api total    USD {summary['api_total']}")
    click.echo(f"human translation would cost USD {summary['human_translation']}")
    ratio = summary.get("ratio_vs_human_translation")
    if ratio is not None:
        click.echo(f"human / api cost ratio: {ratio:.1f}x")


@main.command()
@click.argument("testset", type=click.Path(exists=True, path_type=Path))
@click.option(
    "--grid",
    "grid_path",
    default=None,
    type=click.Path(exists=True, path_type=Path),
    help="Config grid JSON; the built-in eleven-row grid when omitted.",
)
@click.option(
    "--manual",
    "manual_path",
    default=None,
    type=click.Path(exists=True, path_type=Path),
    help='JSON of manual annotation lines keyed "doc_id:seg_id".',
)
@click.option(
    "--records",
    "records_path",
    default=None,
    type=click.Path(path_type=Path),
    help="Also write one JSON record per run here.",
)
def matrix(
    testset: Path,
    grid_path: Path | None,
    manual_path: Path | None,
    records_path: Path | None,
) -> None:
    """Score a grid of pipeline configurations against a reference testset."""
    manual = None
    if manual_path:
        manual = {}
        for key, line in _load_json(str(manual_path)).items():
            doc_id, _, seg = key.rpartition(":")
            manual[(doc_id, int(seg))] = line
    try:
        rows = load_config_rows(grid_path) if grid_path else builtin_config_grid()
        segments = load_corpus(testset)
        backends: dict = {}
        for row in rows:
            backends.update(backends_for_config(row.config, dict(os.environ)))
        report = run_config_matrix(
            rows,
            segments,
            backends=backends,
            adapters=[builtin_overlap_adapter()],
            manual_annotations=manual,
        )
    except _ERRORS as exc:
        raise click.ClickException(str(exc))
    click.echo(matrix_report_text(report))
    if records_path:
        write_matrix_records(report, records_path)
        click.echo(f"records written to {records_path}")


@main.command()
@click.argument("doc_id")
@click.option(
    "--system",
    "systems",
    multiple=True,
    required=True,
    help="NAME=FILE where FILE maps segment ids to translations.",
)
@click.option("--seed", default=0, show_default=True)
@click.option("--sample", default=None, type=int, help="Segments to sample.")
@click.pass_context
def sheet(
    ctx: click.Context,
    doc_id: str,
    systems: tuple[str, ...],
    seed: int,
    sample: int | None,
) -> None:
    """Build a blinded scoring sheet comparing system outputs."""
    parsed = []
    for item in systems:
        name, _, path = item.partition("=")
        if not name or not path:
            raise click.ClickException(f"expected NAME=FILE, got {item!r}")
        translations = {int(k): v for k, v in _load_json(path).items()}
        parsed.append((name, translations))
    state = _state(ctx)
    try:
        sheet_id, rows = state.create_sheet(
            doc_id, parsed, seed=seed, sample_size=sample
        )
    except _ERRORS as exc:
        raise click.ClickException(str(exc))
    click.echo(f"sheet {sheet_id}: {len(rows)} rows")
    click.echo(f"grade the A/C/S columns in {state.sheets_dir / (sheet_id + '.csv')}")


@main.command()
@click.argument("sheet_id")
@click.argument(
    "scored_csv", required=False, type=click.Path(exists=True, path_type=Path)
)
@click.option("--baseline", default=None, help="System id the deltas compare to.")
@click.pass_context
def score(
    ctx: click.Context, sheet_id: str, scored_csv: Path | None, baseline: str | None
) -> None:
    """Score a graded sheet and reveal the per-system results."""
    state = _state(ctx)
    csv_path = scored_csv or state.sheets_dir / f"{sheet_id}.csv"
    mapping_path = state.sheets_dir / f"{sheet_id}.mapping.jsonl"
    if not csv_path.exists() or not mapping_path.exists():
        raise click.ClickException(f"unknown sheet {sheet_id}")
    try:
        rows = read_eval_sheet(csv_path)
        mapping = read_mapping(mapping_path)
        results = score_eval_sheet(rows, mapping, baseline=baseline)
    except _ERRORS as exc:
        raise click.ClickException(str(exc))
    click.echo(render_eval_table(results))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.pass_context
def serve(ctx: click.Context, host: str, port: int) -> None:
    """Start the HTTP service.

    Ingest corpora into the data dir before starting: the stores are
    single-writer and the server snapshots them at startup.
    """
    import uvicorn

    uvicorn.run(create_app(_state(ctx)), host=host, port=port)


if __name__ == "__main__":
    main()
