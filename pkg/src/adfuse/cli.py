"""Command-line harness: simulate, run, uci, extract, serve.

Exit code 0 on success, 2 on validation failures (click's usage-error
convention). Configuration comes from JSON files; flags override.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .alarms import extract_alarms, morph_open
from .covariance import BorderPolicy, extract_region_feature
from .fusion import Algorithm, FusionConfig, Solver
from .harness import (
    REFERENCE_STREAMS,
    FeedbackPolicy,
    emit_report,
    load_uci_dataset,
    run_comparison,
    run_uci,
)
from .imageio import load_image, load_mask
from .stream import (
    generate_stream,
    load_stream,
    load_stream_config,
    save_stream,
    stream_config_from_dict,
)


@click.group()
def main():
    """Adaptive decision fusion toolkit."""


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _resolve_stream_config(config_path, reference, seed):
    if (config_path is None) == (reference is None):
        _fail("provide exactly one of --config or --reference")
    try:
        if config_path is not None:
            cfg = load_stream_config(config_path)
        else:
            cfg = REFERENCE_STREAMS[reference]()
    except (KeyError, ValueError, OSError) as exc:
        _fail(str(exc))
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--reference", type=click.Choice(sorted(REFERENCE_STREAMS)))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl")
def simulate(config_path, reference, seed, out_path, fmt):
    """Generate a synthetic decision stream."""
    cfg = _resolve_stream_config(config_path, reference, seed)
    events = generate_stream(cfg)
    save_stream(events, out_path, fmt)
    click.echo(f"wrote {len(events)} events to {out_path}")


@main.command()
@click.option("--stream", "stream_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--reference", type=click.Choice(sorted(REFERENCE_STREAMS)))
@click.option("--seed", type=int, default=None, help="Override the reference stream seed.")
@click.option(
    "--algorithms",
    default="EADF,POCS,ULP,Fixed",
    show_default=True,
    help="Comma-separated algorithm list.",
)
@click.option("--mu", type=float, default=1.0, show_default=True)
@click.option("--c", type=float, default=4.0, show_default=True)
@click.option(
    "--solver",
    type=click.Choice([s.value for s in Solver]),
    default=Solver.ROOT_FIND.value,
    show_default=True,
)
@click.option("--freeze-after", type=int, default=None, help="Apply feedback only before this step.")
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def run(stream_path, reference, seed, algorithms, mu, c, solver, freeze_after, report_path, fmt):
    """Compare fusion algorithms over one stream."""
    if stream_path is not None:
        try:
            events = load_stream(stream_path)
        except ValueError as exc:
            _fail(str(exc))
    else:
        cfg = _resolve_stream_config(None, reference, seed)
        events = generate_stream(cfg)
    if not events:
        _fail("stream is empty")
    try:
        configs = [
            FusionConfig(algorithm=Algorithm(name.strip()), mu=mu, c=c, solver=Solver(solver))
            for name in algorithms.split(",")
            if name.strip()
        ]
    except ValueError as exc:
        _fail(str(exc))
    policy = (
        FeedbackPolicy.always()
        if freeze_after is None
        else FeedbackPolicy.train_then_freeze(freeze_after)
    )
    try:
        metrics = run_comparison(events, configs, policy)
        emit_report(metrics, report_path, fmt)
    except ValueError as exc:
        _fail(str(exc))
    for name, m in metrics.items():
        click.echo(
            f"{name}: avg_sq_error={m.avg_sq_error:.6g} "
            f"first_alarm={m.first_alarm_step} convergence={m.convergence_step}"
        )


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--fusion", type=click.Choice(["EADF", "POCS"]), default="EADF", show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
def uci(data_path, fusion, report_path):
    """Batch-train/fixed-test protocol on the ionosphere dataset."""
    try:
        dataset = load_uci_dataset(data_path)
        result = run_uci(dataset, fusion=fusion)
    except ValueError as exc:
        _fail(str(exc))
    for name in result.test_accuracy:
        click.echo(
            f"{name}: train={result.train_accuracy[name]:.4f} test={result.test_accuracy[name]:.4f}"
        )
    click.echo(
        f"fused[{fusion}]: train={result.fused_train_accuracy:.4f} "
        f"test={result.fused_test_accuracy:.4f}"
    )
    if report_path:
        payload = {
            "fusion": fusion,
            "train_accuracy": result.train_accuracy,
            "test_accuracy": result.test_accuracy,
            "fused_train_accuracy": result.fused_train_accuracy,
            "fused_test_accuracy": result.fused_test_accuracy,
            "weights": result.weights,
        }
        Path(report_path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


@main.command()
@click.option(
    "--manifest",
    "manifest_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="CSV with rows 'path,label'.",
)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option(
    "--border",
    type=click.Choice([p.value for p in BorderPolicy]),
    default=BorderPolicy.INTERIOR_ONLY.value,
    show_default=True,
)
def extract(manifest_path, out_path, border):
    """Region-covariance features for every image in a manifest."""
    manifest_path = Path(manifest_path)
    rows = []
    try:
        with manifest_path.open("r", encoding="utf-8", newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row:
                    continue
                if len(row) != 2:
                    _fail(f"{manifest_path}:{lineno}: expected 'path,label'")
                image_path = (manifest_path.parent / row[0]).resolve()
                region = load_image(image_path)
                feature = extract_region_feature(region, BorderPolicy(border))
                rows.append([row[0], row[1]] + [repr(float(v)) for v in feature])
    except (OSError, ValueError) as exc:
        _fail(str(exc))
    with Path(out_path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label"] + [f"f{i + 1}" for i in range(42)])
        writer.writerows(rows)
    click.echo(f"wrote {len(rows)} feature rows to {out_path}")


@main.command()
@click.option(
    "--mask",
    "mask_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Binary PGM decision mask.",
)
@click.option("--kernel-radius", type=int, default=1, show_default=True)
@click.option("--min-pixels", type=int, default=16, show_default=True)
def alarms(mask_path, kernel_radius, min_pixels):
    """Morphological cleanup + connected-component alarms for one mask."""
    try:
        mask = load_mask(mask_path)
        regions = extract_alarms(morph_open(mask, kernel_radius), min_pixels)
    except ValueError as exc:
        _fail(str(exc))
    click.echo(
        json.dumps(
            [
                {
                    "component_id": r.component_id,
                    "pixel_count": r.pixel_count,
                    "bbox": list(r.bounding_box),
                }
                for r in regions
            ]
        )
    )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--persist-dir", type=click.Path(file_okay=False), default=None)
@click.option(
    "--pending-ttl",
    type=float,
    default=None,
    help="Expire unanswered review requests after this many seconds.",
)
def serve(host, port, persist_dir, pending_ttl):
    """Start the oracle feedback service."""
    import uvicorn

    from .api import create_app
    from .service import SessionManager

    app = create_app(SessionManager(persist_dir=persist_dir, pending_ttl_seconds=pending_ttl))
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
