"""Command-line entry points: serve the API, replay workflows, predict."""

from __future__ import annotations

import csv
import io
import json
import socket
import sys
from pathlib import Path

import click


@click.group()
def main() -> None:
    """Stacking-ensemble workbench."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, help="0 binds an ephemeral port")
@click.option("--persist", type=click.Path(file_okay=False), default=None,
              help="Directory for the evaluation cache and session journals")
@click.option("--workers", type=int, default=None, help="Evaluation worker threads")
def serve(host: str, port: int, persist: str | None, workers: int | None) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .service import create_app

    app = create_app(persist_dir=persist, max_workers=workers)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    bound_port = sock.getsockname()[1]
    click.echo(f"listening on http://{host}:{bound_port}", nl=True)
    sys.stdout.flush()
    config = uvicorn.Config(app, log_level="warning")
    server = uvicorn.Server(config)
    server.run(sockets=[sock])


@main.command(name="run-workflow")
@click.argument("workflow_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--export-dir", type=click.Path(file_okay=False), default=None,
              help="Where exported stack documents are written (default: alongside the workflow)")
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None,
              help="Optional evaluation cache directory")
@click.option("--workers", type=int, default=None, help="Evaluation worker threads")
@click.option("--seed", type=int, default=None, help="Override the workflow's seed")
@click.option("--folds", type=int, default=None, help="Override the workflow's fold count")
@click.option("--grid-config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON grid file overriding the workflow's grids")
@click.option("--label-column", default=None, help="Override the workflow's label column")
@click.option("--quiet", is_flag=True, help="Only print the final table")
def run_workflow_cmd(workflow_file: str, export_dir: str | None, cache_dir: str | None,
                     workers: int | None, seed: int | None, folds: int | None,
                     grid_config: str | None, label_column: str | None, quiet: bool) -> None:
    """Replay a scripted session and print the per-step 4-metric table."""
    from .workflow import WorkflowError, run_workflow

    doc = json.loads(Path(workflow_file).read_text())
    if seed is not None:
        doc["seed"] = seed
    if folds is not None:
        doc["n_folds"] = folds
    if label_column is not None:
        doc["label_column"] = label_column
    if grid_config is not None:
        doc.pop("grids", None)
        doc["grids_path"] = grid_config
    target = Path(export_dir) if export_dir else Path(workflow_file).resolve().parent
    echo = None if quiet else click.echo
    try:
        _session, table = run_workflow(
            doc, cache_dir=cache_dir, max_workers=workers, export_dir=target, echo=echo
        )
    except WorkflowError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(table)


@main.command()
@click.option("--stack", "stack_file", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Exported stack JSON document")
@click.option("--data", "data_file", required=True, type=click.Path(exists=True, dir_okay=False),
              help="CSV with the feature columns of the training data")
@click.option("--out", "out_file", type=click.Path(dir_okay=False), default=None,
              help="Output CSV (default: stdout)")
def predict(stack_file: str, data_file: str, out_file: str | None) -> None:
    """Predict labels and class probabilities with an exported stack."""
    from .stacker import StackError, import_stack
    from .wrangler import CsvValidationError, load_feature_csv

    try:
        predictor = import_stack(Path(stack_file).read_text())
        X = load_feature_csv(Path(data_file).read_text(), tuple(predictor.feature_names))
    except (StackError, CsvValidationError) as exc:
        raise click.ClickException(str(exc)) from exc
    labels = predictor.predict_labels(X)
    proba = predictor.predict_proba(X)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label"] + [f"proba_{c}" for c in predictor.class_names])
    for label, row in zip(labels, proba):
        writer.writerow([label] + [f"{p:.10f}" for p in row])
    text = buf.getvalue()
    if out_file:
        Path(out_file).write_text(text)
        click.echo(f"wrote {len(labels)} predictions to {out_file}")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
