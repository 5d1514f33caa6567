"""Command-line interface of PyQuboFolio."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import typer

from pyqubofolio.exceptions import (
    AlignmentError,
    ConfigError,
    DataParseError,
    DimensionMismatchError,
    EmptyUniverseError,
    InputRangeError,
    InputTypeError,
    InputValueError,
    InsufficientDataError,
    MissingColumnError,
    NonPositivePriceError,
)
from pyqubofolio.helpers import synthetic_prices, write_prices
from pyqubofolio.pipeline import RunConfig, run_optimize, run_report, run_verify

__all__ = ["app", "main"]

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_EMPTY_UNIVERSE = 3

INPUT_ERRORS = (
    AlignmentError,
    ConfigError,
    DataParseError,
    DimensionMismatchError,
    FileNotFoundError,
    InputRangeError,
    InputTypeError,
    InputValueError,
    InsufficientDataError,
    MissingColumnError,
    NonPositivePriceError,
)

logger = logging.getLogger("pyqubofolio")

app = typer.Typer(
    name="pyqubofolio",
    help="Dynamic portfolio optimization with a minimal holding period.",
    add_completion=False,
    no_args_is_help=True,
)


def _fail(message: str, code: int) -> typer.Exit:
    typer.echo(f"Error: {message}", err=True)
    return typer.Exit(code=code)


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as ex:
        raise ConfigError("--sweep-gamma", f"expected comma-separated numbers, got {text!r}") from ex
    if not grid:
        raise ConfigError("--sweep-gamma", "expected at least one value")
    return grid


@app.callback()
def _setup(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress messages."),
) -> None:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    logger.setLevel(logging.INFO if verbose else logging.WARNING)


@app.command()
def optimize(
    config: Path = typer.Option(..., "--config", help="TOML run configuration."),
    sweep_gamma: Optional[str] = typer.Option(  # noqa: UP007
        None, "--sweep-gamma", help="Comma-separated risk aversions to sweep per package."
    ),
) -> None:
    """Optimize every risk package and write trajectories, metrics and the frontier."""
    try:
        cfg = RunConfig.from_toml(config)
        grid = _parse_grid(sweep_gamma) if sweep_gamma else None
        result = run_optimize(cfg, grid)
    except EmptyUniverseError as ex:
        raise _fail(str(ex), EXIT_EMPTY_UNIVERSE) from ex
    except INPUT_ERRORS as ex:
        raise _fail(str(ex), EXIT_USAGE) from ex
    for path in result.artifacts:
        typer.echo(str(path))


@app.command()
def verify(
    trajectory: Path = typer.Option(..., "--trajectory", help="Trajectory CSV file."),
    hold: int = typer.Option(..., "--hold", help="Minimal holding period in steps."),
) -> None:
    """Check that a trajectory never sells an asset before its holding period ends."""
    try:
        result = run_verify(trajectory, hold)
    except INPUT_ERRORS as ex:
        raise _fail(str(ex), EXIT_USAGE) from ex
    if not result.ok:
        typer.echo(f"Holding period violated on {result.date} for {result.asset}.")
        raise typer.Exit(code=EXIT_VIOLATION)
    typer.echo("Trajectory is feasible.")


@app.command()
def report(
    frontier: Path = typer.Option(..., "--frontier", help="Frontier CSV file."),
) -> None:
    """Print package metrics and their Sharpe percentile among the baselines."""
    try:
        text = run_report(frontier)
    except INPUT_ERRORS as ex:
        raise _fail(str(ex), EXIT_USAGE) from ex
    typer.echo(text)


@app.command("gen-data")
def gen_data(
    seed: int = typer.Option(0, "--seed", help="Random seed."),
    assets: int = typer.Option(20, "--assets", help="Number of assets."),
    days: int = typer.Option(311, "--days", help="Number of business days."),
    out: Path = typer.Option(..., "--out", help="Output CSV file."),
    groups: int = typer.Option(7, "--groups", help="Number of planted trend groups."),
) -> None:
    """Write synthetic prices with planted trend groups in the input CSV schema."""
    try:
        market = synthetic_prices(seed, assets, days, groups)
    except INPUT_ERRORS as ex:
        raise _fail(str(ex), EXIT_USAGE) from ex
    write_prices(market.prices, out)
    typer.echo(str(out))


def main() -> None:
    """Entry point of the ``pyqubofolio`` script."""
    app()
