import json
import logging
from pathlib import Path
from typing import Optional

import click

from . import artifacts
from .config import diagnose, load_scenario
from .errors import PlanningError
from .models import RunResult
from .pipeline import fit_stage, run_pipeline, split_net_load
from .schemas import SizingParams

logger = logging.getLogger(__name__)

MODES = ["full", "cost-only", "step1-only", "split-only"]

config_option = click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Scenario TOML file.",
)
out_option = click.option(
    "--out",
    "output_dir",
    type=click.Path(file_okay=False, path_type=Path),
    help="Output directory; overrides [run] output_dir.",
)


def _fail(exc: PlanningError, output_dir: Optional[Path] = None, mode: str = "full") -> None:
    """Report a planning error, record it in result.json when possible and exit."""
    click.echo(json.dumps(exc.to_dict(), default=str), err=True)
    if output_dir is not None:
        record = RunResult(
            status=exc.status,
            mode=mode,
            reason=exc.reason,
            detail=exc.detail,
            context=json.loads(json.dumps(exc.context, default=str)),
        )
        artifacts.write_json(record, artifacts.ensure_dir(output_dir) / artifacts.RESULT_FILE)
    raise SystemExit(exc.exit_code)


@click.command()
@config_option
@click.option("--mode", type=click.Choice(MODES), help="Stages to run.")
@click.option("--seed", type=int, help="Seed for sampling and the swarm.")
@out_option
@click.option("--cutoff-hz", type=float, help="Cut-off for split-only runs.")
def run(
    config_path: Path,
    mode: Optional[str],
    seed: Optional[int],
    output_dir: Optional[Path],
    cutoff_hz: Optional[float],
):
    """
    Run the planner on a scenario and write its artifacts.

    Args:
        config_path (Path): Scenario TOML.
        mode (str, optional): full, cost-only, step1-only or split-only.
        seed (int, optional): Run seed.
        output_dir (Path, optional): Artifact directory.
        cutoff_hz (float, optional): Cut-off for split-only runs.

    Exit status is 0 on success, 1 when no admissible plan exists and 2 on
    configuration or input errors.
    """
    flags = {
        "run.mode": mode,
        "run.seed": seed,
        "run.output_dir": str(output_dir) if output_dir else None,
        "run.cutoff_hz": cutoff_hz,
    }
    overrides = {path: value for path, value in flags.items() if value is not None}
    try:
        config = load_scenario(config_path, overrides)
    except PlanningError as exc:
        _fail(exc)

    try:
        result = run_pipeline(config)
    except PlanningError as exc:
        _fail(exc, config.run.output_dir, config.run.mode)

    click.echo(f"{result.status}: {config.run.mode} run written to {config.run.output_dir}")


@click.command()
@config_option
def validate(config_path: Path):
    """
    List every problem in a scenario file; nothing is printed but 'ok' when it is runnable.

    Args:
        config_path (Path): Scenario TOML.
    """
    try:
        diagnostics = diagnose(config_path)
    except PlanningError as exc:
        _fail(exc)
    for diagnostic in diagnostics:
        click.echo(f"{diagnostic.path}: {diagnostic.message}")
    if diagnostics:
        raise SystemExit(2)
    click.echo("ok")


@click.command()
@config_option
@out_option
def fit(config_path: Path, output_dir: Optional[Path]):
    """Fit the per-slot stochastic models and write models.json."""
    try:
        config = load_scenario(config_path)
        models = fit_stage(config)
    except PlanningError as exc:
        _fail(exc)
    output_dir = artifacts.ensure_dir(output_dir or config.run.output_dir)
    path = artifacts.write_json(models, output_dir / artifacts.MODELS_FILE)
    click.echo(f"ok: models written to {path}")


@click.command()
@click.option(
    "--net-load",
    "net_load_csv",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Net-load CSV with timestamp,value rows in MW.",
)
@click.option("--cutoff-hz", required=True, type=float, help="Cut-off frequency in Hz.")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Scenario supplying sizing parameters and the interval.",
)
@click.option("--interval-hours", type=float, default=0.25, show_default=True)
@out_option
def split(
    net_load_csv: Path,
    cutoff_hz: float,
    config_path: Optional[Path],
    interval_hours: float,
    output_dir: Optional[Path],
):
    """
    Split a net-load series into CHP and BESS shares at one cut-off.

    Args:
        net_load_csv (Path): Net-load history, whole days only.
        cutoff_hz (float): Cut-off in [0, Nyquist].
        config_path (Path, optional): Scenario whose sizing parameters apply.
        interval_hours (float): Sample spacing when no scenario is given.
        output_dir (Path, optional): Artifact directory.
    """
    sizing = SizingParams()
    try:
        if config_path is not None:
            config = load_scenario(config_path)
            sizing = config.sizing_params
            interval_hours = config.inputs.interval_hours
        report = split_net_load(
            net_load_csv, cutoff_hz, interval_hours, sizing, output_dir or Path("out")
        )
    except PlanningError as exc:
        _fail(exc)
    click.echo(f"ok: {len(report.splits)} day(s) split at {report.cutoff_hz} Hz")
