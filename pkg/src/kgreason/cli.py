"""Command-line interface."""

from __future__ import annotations

import dataclasses
import logging
import sys

import click

from . import pipeline as pl
from .errors import KGReasonError
from .synthetic import write_toy_workspace


def _load(ctx: click.Context) -> pl.PipelineConfig:
    opts = ctx.obj
    if not opts.get("config"):
        raise click.UsageError("--config is required for this command")
    try:
        cfg = pl.load_config(opts["config"])
        if opts.get("seed") is not None:
            cfg = dataclasses.replace(cfg, seed=opts["seed"])
        if opts.get("output_dir"):
            cfg = dataclasses.replace(cfg, output_dir=opts["output_dir"])
        if opts.get("lm"):
            cfg = dataclasses.replace(cfg, lm=dataclasses.replace(cfg.lm, kind=opts["lm"]))
            cfg.validate()
    except KGReasonError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc
    return cfg


@click.group()
@click.option("--config", type=click.Path(), help="Pipeline config file (YAML or JSON).")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--output-dir", type=click.Path(), default=None, help="Override the output directory.")
@click.option("--lm", type=click.Choice(["mock", "http"]), default=None, help="Override the LM backend.")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def main(ctx, config, seed, output_dir, lm, verbose):
    """Reasoning-path pipeline over knowledge graphs."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = {"config": config, "seed": seed, "output_dir": output_dir, "lm": lm}


def _run(fn, *args):
    try:
        return fn(*args)
    except KGReasonError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc


@main.command()
@click.pass_context
def ingest(ctx):
    """Validate the triple file and report graph statistics."""
    stats = _run(pl.run_ingest, _load(ctx))
    for key, value in stats.items():
        click.echo(f"{key}: {value}")


@main.command("train-structural")
@click.pass_context
def train_structural(ctx):
    """Train the structural reasoner and write a checkpoint."""
    path = _run(pl.run_train, _load(ctx))
    click.echo(f"checkpoint written to {path}")


@main.command("build-distill")
@click.pass_context
def build_distill(ctx):
    """Export distillation prompt/completion pairs from gold paths."""
    meta = _run(pl.run_build_distill, _load(ctx))
    click.echo(
        f"pairs: {meta['pairs']}  emitted: {meta['emitted_questions']}  "
        f"excluded: {meta['excluded_questions']}"
    )


@main.command("generate-paths")
@click.pass_context
def generate_paths(ctx):
    """Generate and ground semantic paths for every question."""
    rows = _run(pl.run_generate_paths, _load(ctx))
    grounded = sum(len(r.get("paths", [])) for r in rows)
    click.echo(f"questions: {len(rows)}  grounded paths: {grounded}")


@main.command()
@click.pass_context
def rethink(ctx):
    """Score, filter, and rank candidate paths; write the score report."""
    lines = _run(pl.run_rethink, _load(ctx))
    click.echo(f"scored paths: {lines}")


@main.command()
@click.pass_context
def answer(ctx):
    """Answer every question end to end (no metrics)."""
    rows = _run(pl.run_answer, _load(ctx))
    click.echo(f"answered: {len(rows)}")


@main.command()
@click.pass_context
def evaluate(ctx):
    """Run the full pipeline and write the evaluation report."""
    report = _run(pl.run_pipeline, _load(ctx))
    agg = report.aggregates
    click.echo(
        f"hits@1: {agg['hits_at_1']:.4f}  f1: {agg['f1']:.4f}  "
        f"questions: {agg['num_questions']}"
    )


@main.command()
@click.option("--parameter", type=click.Choice(list(pl.SWEEPABLE)), required=True)
@click.option("--values", required=True, help="Comma-separated ascending grid, e.g. 0.2,0.4,0.6")
@click.pass_context
def sweep(ctx, parameter, values):
    """Evaluate across a grid of one rethink parameter."""
    try:
        grid = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"values must be floats: {exc}") from exc
    rows = _run(pl.sweep, _load(ctx), parameter, grid)
    for row in rows:
        click.echo(
            f"{parameter}={row['value']}: hits@1={row['hits_at_1']:.4f} "
            f"f1={row['f1']:.4f} retained={row['retained_mean']:.2f}"
        )


@main.command("make-fixture")
@click.option("--directory", type=click.Path(), default="toy", show_default=True)
@click.pass_context
def make_fixture(ctx, directory):
    """Write a self-contained toy workspace (graph, QA, vectors, mock LM)."""
    paths = write_toy_workspace(directory)
    for key, value in paths.items():
        click.echo(f"{key}: {value}")
    click.echo(f"\ntry: kgreason --config {paths['config']} evaluate")


if __name__ == "__main__":
    main(sys.argv[1:])
