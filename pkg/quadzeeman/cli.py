"""CLI entry point for quadzeeman."""

import json
import logging
from pathlib import Path
from typing import Annotated

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn

from quadzeeman.core.artifacts import ArtifactStore
from quadzeeman.core.config import load_config
from quadzeeman.core.exceptions import QuadZeemanError
from quadzeeman.core.models import RunStats
from quadzeeman.core.runner import ExperimentRunner
from quadzeeman.signal.sweeps import Mode

app = typer.Typer(
    name="quadzeeman",
    help="Simulate quadratic Zeeman phase accumulation driven by an oscillating field pulser.",
    no_args_is_help=True,
)
console = Console()
err_console = Console(stderr=True)

ConfigOption = Annotated[
    Path | None, typer.Option("--config", "-c", help="Experiment config (JSON)")
]
OutOption = Annotated[
    Path | None, typer.Option("--out", "-o", help="Output directory (overrides config)")
]
SeedOption = Annotated[int | None, typer.Option("--seed", help="Seed (overrides config)")]
OverrideOption = Annotated[
    list[str] | None,
    typer.Option("--override", help="Dotted config override, e.g. circuit.V=11.5"),
]
ThreadsOption = Annotated[int, typer.Option("--threads", help="Worker threads", min=1)]
VerboseOption = Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging")]
JsonOption = Annotated[bool, typer.Option("--json", "-j", help="Output summary as JSON")]


def setup_logging(verbose: bool) -> None:
    """Route library logging through rich on stderr."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def print_stats(stats: RunStats, out_dir: Path) -> None:
    """Human-readable run summary."""
    console.print("[green]Done![/green]")
    console.print(f"  Output: [cyan]{out_dir}[/]")
    console.print(f"  Points: {stats.points}")
    console.print(f"  Files written: {len(stats.files)}")
    for name in stats.files:
        console.print(f"    [dim]{name}[/]")

    summaries = stats.summary.items() if stats.subcommand == "all" else [(None, stats.summary)]
    for section, summary in summaries:
        if section:
            console.print(f"  [bold]{section}[/]")
        for key, value in summary.items():
            shown = f"{value:.6g}" if isinstance(value, float) else value
            console.print(f"    {key}: {shown}")

    if stats.errors:
        console.print(f"  [red]Errors: {len(stats.errors)}[/red]")
        for error in stats.errors:
            console.print(f"    {error}")


def execute(
    subcommand: str,
    config_path: Path | None,
    out: Path | None,
    seed: int | None,
    override: list[str] | None,
    threads: int,
    verbose: bool,
    output_json: bool,
    mode: Mode = "motionless",
) -> None:
    """Load the config, run one subcommand and report. Exits 1 on any quadzeeman error."""
    setup_logging(verbose)
    try:
        config = load_config(config_path, override or [], seed)
    except QuadZeemanError as e:
        err_console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(1) from e

    out_dir = out or config.output_dir
    store = ArtifactStore(out_dir, subcommand, config.sha256, config.seed)

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        console=err_console,
        disable=output_json,
    ) as progress:
        task = progress.add_task(f"Running [cyan]{subcommand}[/]", total=None)

        def on_progress(description: str, current: int, total: int) -> None:
            progress.update(
                task, total=total, completed=current, description=f"[cyan]{description}[/]"
            )

        runner = ExperimentRunner(
            config, store, threads=threads, on_progress=on_progress, mode=mode
        )
        try:
            stats = runner.run(subcommand)
        except QuadZeemanError as e:
            err_console.print(f"[red]Error:[/red] {e}")
            raise typer.Exit(1) from e

    if output_json:
        print(json.dumps(stats.to_dict(), indent=2, default=float))
    else:
        print_stats(stats, out_dir)


@app.command()
def circuit(
    config: ConfigOption = None,
    out: OutOption = None,
    seed: SeedOption = None,
    override: OverrideOption = None,
    threads: ThreadsOption = 1,
    verbose: VerboseOption = False,
    output_json: JsonOption = False,
) -> None:
    """Simulate the coil current of the configured pulse."""
    execute("circuit", config, out, seed, override, threads, verbose, output_json)


@app.command()
def phases(
    config: ConfigOption = None,
    out: OutOption = None,
    seed: SeedOption = None,
    override: OverrideOption = None,
    threads: ThreadsOption = 1,
    verbose: VerboseOption = False,
    output_json: JsonOption = False,
) -> None:
    """Larmor frequency contributions and accumulated linear and quadratic phases."""
    execute("phases", config, out, seed, override, threads, verbose, output_json)


@app.command("alpha-vs-tau")
def alpha_vs_tau(
    config: ConfigOption = None,
    out: OutOption = None,
    seed: SeedOption = None,
    override: OverrideOption = None,
    threads: ThreadsOption = 1,
    verbose: VerboseOption = False,
    output_json: JsonOption = False,
    montecarlo: Annotated[
        bool, typer.Option("--montecarlo", help="Read out a moving ensemble, not one atom")
    ] = False,
) -> None:
    """Fitted rotation amplitude against pulse length."""
    mode: Mode = "montecarlo" if montecarlo else "motionless"
    execute(
        "alpha-vs-tau", config, out, seed, override, threads, verbose, output_json, mode=mode
    )


@app.command("phase-scaling")
def phase_scaling(
    config: ConfigOption = None,
    out: OutOption = None,
    seed: SeedOption = None,
    override: OverrideOption = None,
    threads: ThreadsOption = 1,
    verbose: VerboseOption = False,
    output_json: JsonOption = False,
) -> None:
    """Quadratic phase against pulse length for each configured supply voltage."""
    execute("phase-scaling", config, out, seed, override, threads, verbose, output_json)


@app.command()
def dephasing(
    config: ConfigOption = None,
    out: OutOption = None,
    seed: SeedOption = None,
    override: OverrideOption = None,
    threads: ThreadsOption = 1,
    verbose: VerboseOption = False,
    output_json: JsonOption = False,
) -> None:
    """Monte Carlo ensemble amplitude against the number of pi phase cycles."""
    execute("dephasing", config, out, seed, override, threads, verbose, output_json)


@app.command()
def fid(
    config: ConfigOption = None,
    out: OutOption = None,
    seed: SeedOption = None,
    override: OverrideOption = None,
    threads: ThreadsOption = 1,
    verbose: VerboseOption = False,
    output_json: JsonOption = False,
) -> None:
    """Synthesize the rotation signal of the configured pulse and fit it."""
    execute("fid", config, out, seed, override, threads, verbose, output_json)


@app.command()
def calibrate(
    config: ConfigOption = None,
    out: OutOption = None,
    seed: SeedOption = None,
    override: OverrideOption = None,
    threads: ThreadsOption = 1,
    verbose: VerboseOption = False,
    output_json: JsonOption = False,
) -> None:
    """Field per ampere giving one quadratic phase cycle per target period."""
    execute("calibrate", config, out, seed, override, threads, verbose, output_json)


@app.command("field-map")
def field_map(
    config: ConfigOption = None,
    out: OutOption = None,
    seed: SeedOption = None,
    override: OverrideOption = None,
    threads: ThreadsOption = 1,
    verbose: VerboseOption = False,
    output_json: JsonOption = False,
) -> None:
    """Per-ampere coil field over the cell and its homogeneity."""
    execute("field-map", config, out, seed, override, threads, verbose, output_json)


@app.command("all")
def run_all(
    config: ConfigOption = None,
    out: OutOption = None,
    seed: SeedOption = None,
    override: OverrideOption = None,
    threads: ThreadsOption = 1,
    verbose: VerboseOption = False,
    output_json: JsonOption = False,
) -> None:
    """Run every subcommand into one output directory."""
    execute("all", config, out, seed, override, threads, verbose, output_json)


if __name__ == "__main__":
    app()
