"""The ``fuzz`` command line: run campaigns, replay bugs, analyze logs."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .analysis import (
    analyze_correlations,
    read_log,
    render_correlations_table,
    render_time_split_table,
    time_split_report,
)
from .campaign import load_config, replay_bug, run_campaign
from .errors import ModelFuzzError
from .graph import decode_model
from .motifs import variety_degree


@click.group()
def main():
    """Differential fuzzing of tensor-compute runtimes."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_dir", default=None, help="Override the configured output directory.")
@click.option("--iterations", default=None, type=int, help="Override the iteration budget.")
@click.option("--seed", default=None, type=int, help="Override the campaign RNG seed.")
@click.option("--fusion-raw-x", is_flag=True, default=False,
              help="Fuse over un-normalized (reciprocal-time) values instead of normalized columns.")
@click.option("--no-guidance", is_flag=True, default=False,
              help="Disable all heuristic guidance (uniform weights, random seed selection).")
def run_cmd(config_path, output_dir, iterations, seed, fusion_raw_x, no_guidance):
    """Run a fuzzing campaign from a JSON/TOML config file."""
    try:
        config = load_config(config_path)
        if output_dir is not None:
            config = replace(config, output_dir=output_dir)
        if iterations is not None:
            config = replace(config, iterations=iterations)
        if seed is not None:
            config = replace(config, rng_seed=seed)
        if fusion_raw_x:
            config = replace(config, fusion_raw_x=True)
        if no_guidance:
            config = replace(config, guided=False)
        result = run_campaign(config)
    except ModelFuzzError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(json.dumps(result.summary, sort_keys=True, indent=2))
    click.echo(f"log: {result.log_path}", err=True)
    click.echo(f"bugs: {result.bugs_dir}", err=True)


@main.command("replay")
@click.argument("bug_json", type=click.Path(exists=True, dir_okay=False))
def replay_cmd(bug_json):
    """Re-run a persisted bug report and compare verdicts."""
    try:
        outcome = replay_bug(bug_json)
    except ModelFuzzError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(json.dumps(outcome, sort_keys=True, indent=2))
    if not outcome["match"]:
        sys.exit(1)


@main.group("analyze")
def analyze_group():
    """Empirical-study style reports over a campaign log."""


@analyze_group.command("correlations")
@click.argument("log", type=click.Path(exists=True, dir_okay=False))
def correlations_cmd(log):
    """Pearson correlations between logged model measurements."""
    try:
        report = analyze_correlations(read_log(log))
    except ModelFuzzError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(render_correlations_table(report))


@analyze_group.command("time-split")
@click.argument("log", type=click.Path(exists=True, dir_okay=False))
def time_split_cmd(log):
    """Larger/smaller model groups split at the median execution time."""
    try:
        report = time_split_report(read_log(log))
    except ModelFuzzError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(render_time_split_table(report))


@main.command("variety")
@click.argument("model_json", type=click.Path(exists=True, dir_okay=False))
@click.option("--depth", default=2, type=int, show_default=True)
def variety_cmd(model_json, depth):
    """Variety degree of a serialized model."""
    try:
        model = decode_model(Path(model_json).read_bytes())
        click.echo(variety_degree(model, depth))
    except ModelFuzzError as exc:
        raise click.ClickException(str(exc)) from exc


if __name__ == "__main__":
    main()
