"""Command line for robustlab.

    robustlab run <config.yaml|preset>   run sweeps, write CSV and SVG
    robustlab verify [suite]             run the acceptance suite
    robustlab plot <csv|dir> <spec.yaml> draw figures from result CSVs
    robustlab presets                    list presets and suites

Exit codes: 0 success, 1 when more than 10% of rows or any criterion
failed, 2 on configuration errors.
"""

import json
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from robustlab import __version__
from robustlab.exceptions import ConfigurationError, RobustLabError
from robustlab.harness.acceptance import CRITERIA, SUITES, verify_acceptance
from robustlab.harness.config import ExperimentConfig, apply_environment, load_config
from robustlab.harness.plotting import load_plot_spec, render
from robustlab.harness.presets import PRESET_DESCRIPTIONS, PRESETS, get_preset
from robustlab.harness.results import ResultRow, read_csv
from robustlab.harness.runner import ExperimentResult, expected_rows, run_experiment
from robustlab.types import CommandResult
from robustlab.utils.logging import get_logger, set_verbosity, setup_file_logger

app = typer.Typer(
    name="robustlab",
    help="Generalization/robustness trade-off lab for two-layer networks",
    add_completion=False,
)

console = Console()
logger = get_logger(__name__)

CONFIG_EXIT_CODE = 2


def print_command_result(result: CommandResult, json_output: Optional[Path] = None) -> None:
    """Print command result with rich formatting and optional JSON output."""
    if json_output:
        json_output.parent.mkdir(parents=True, exist_ok=True)
        json_output.write_text(json.dumps(result.to_dict(), indent=2, default=str))
        console.print(f"[dim]JSON output: {json_output}[/dim]")

    table = Table(title=f"Command: {result.command}")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="green")

    table.add_row("Status", f"[bold]{result.status}[/bold]")
    table.add_row("Duration", f"{result.duration_ms:.2f}ms")

    for key, value in result.summary.items():
        table.add_row(key.replace("_", " ").title(), str(value))

    console.print(table)

    if result.errors:
        console.print("\n[bold red]Errors:[/bold red]")
        for error in result.errors:
            console.print(f"  ❌ {error}")

    if result.warnings:
        console.print("\n[bold yellow]Warnings:[/bold yellow]")
        for warning in result.warnings:
            console.print(f"  ⚠️  {warning}")


def _fail(error: Exception) -> typer.Exit:
    console.print(f"[bold red]Error:[/bold red] {error}")
    return typer.Exit(CONFIG_EXIT_CODE if isinstance(error, ConfigurationError) else 1)


def _version_callback(value: bool) -> None:
    if value:
        console.print(f"robustlab {__version__}")
        raise typer.Exit()


@app.callback()
def main_callback(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Warnings and errors only"),
    log_file: Optional[Path] = typer.Option(None, "--log-file", help="Append JSON log lines to this file"),
    version: bool = typer.Option(
        False, "--version", callback=_version_callback, is_eager=True, help="Show version and exit"
    ),
) -> None:
    """Generalization/robustness trade-off lab for two-layer networks."""
    set_verbosity(verbose=verbose, quiet=quiet)
    if log_file:
        setup_file_logger(log_file)


def resolve_configs(target: str) -> list[ExperimentConfig]:
    """A YAML file path or a preset name."""
    path = Path(target)
    if path.suffix in (".yaml", ".yml") or path.exists():
        return [load_config(path)]
    return [apply_environment(config) for config in get_preset(target)]


@app.command("run")
def run(
    target: str = typer.Argument(..., help="Config YAML or preset name (see `robustlab presets`)"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Override output directory"),
    workers: int = typer.Option(1, "--workers", "-w", min=1, help="Worker processes"),
    json_output: Optional[Path] = typer.Option(None, "--json", help="JSON summary file"),
) -> None:
    """Run experiment sweeps and write CSV, failure sidecar and figures."""
    start_time = time.time()
    try:
        configs = resolve_configs(target)
    except RobustLabError as e:
        raise _fail(e)
    if output_dir:
        configs = [config.with_output_dir(output_dir) for config in configs]

    results: list[ExperimentResult] = []
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        console=console,
    ) as progress:
        task = progress.add_task("[cyan]Starting...", total=None)
        try:
            for config in configs:
                progress.update(
                    task, description=f"[cyan]{config.name}: {expected_rows(config)} rows..."
                )
                results.append(run_experiment(config, workers=workers))
        except RobustLabError as e:
            raise _fail(e)

    rows = sum(len(r.rows) for r in results)
    failed = sum(len(r.failed_rows) for r in results)
    exit_code = max(r.exit_code for r in results)
    result = CommandResult(
        command="run",
        timestamp=datetime.now(timezone.utc),
        duration_ms=(time.time() - start_time) * 1000,
        status="success" if failed == 0 else ("warning" if exit_code == 0 else "failure"),
        summary={
            "experiments": len(results),
            "rows": rows,
            "failed_rows": failed,
            "csv": ", ".join(str(r.csv_path) for r in results if r.csv_path),
            "figures": len([f for r in results for f in r.figures]),
        },
        errors=[
            f"{row.regime.value} m={row.m} seed={row.ensemble_seed}: {row.error}"
            for r in results
            for row in r.failed_rows
        ][:20],
    )
    print_command_result(result, json_output)
    raise typer.Exit(exit_code)


def _parse_criteria(text: Optional[str]) -> Optional[tuple[int, ...]]:
    if not text:
        return None
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise ConfigurationError(f"criteria must be comma-separated integers: {text}", key="criteria") from e


@app.command("verify")
def verify(
    suite: str = typer.Argument("default", help="Suite: default, quick or full"),
    criteria: Optional[str] = typer.Option(None, "--criteria", "-c", help="Subset, e.g. 2,7,11"),
    report: Optional[Path] = typer.Option(None, "--report", help="JSON Lines report file"),
    workers: int = typer.Option(1, "--workers", "-w", min=1, help="Worker processes for sweeps"),
    json_output: Optional[Path] = typer.Option(None, "--json", help="JSON summary file"),
    zero_theory: bool = typer.Option(False, "--zero-theory", hidden=True),
    tolerance_scale: float = typer.Option(1.0, "--tolerance-scale", hidden=True),
) -> None:
    """Run the acceptance criteria and report pass/fail per criterion."""
    start_time = time.time()
    overrides: dict[str, object] = {
        "zero_theory": zero_theory,
        "tolerance_scale": tolerance_scale,
        "workers": workers,
    }
    try:
        selected = _parse_criteria(criteria)
        if selected is not None:
            overrides["criteria"] = selected
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
        ) as progress:
            task = progress.add_task("[cyan]Starting...", total=None)
            outcome = verify_acceptance(
                suite,
                report_path=report,
                on_start=lambda item: progress.update(
                    task, description=f"[cyan]Criterion {item.number}: {item.name}..."
                ),
                **overrides,
            )
    except RobustLabError as e:
        raise _fail(e)

    table = Table(title=f"Acceptance suite: {outcome.suite}")
    table.add_column("#", style="cyan", justify="right")
    table.add_column("Criterion", style="cyan")
    table.add_column("Result")
    table.add_column("Duration", justify="right")
    for item in outcome.results:
        mark = "[green]PASS[/green]" if item.passed else "[red]FAIL[/red]"
        table.add_row(str(item.number), item.name, mark, f"{item.duration_ms / 1000:.1f}s")
    console.print(table)

    result = CommandResult(
        command="verify",
        timestamp=datetime.now(timezone.utc),
        duration_ms=(time.time() - start_time) * 1000,
        status="success" if outcome.passed else "failure",
        summary={
            "suite": outcome.suite,
            "criteria": len(outcome.results),
            "failed": ", ".join(str(r.number) for r in outcome.failed) or "none",
            "report": str(report) if report else "-",
        },
        errors=[f"criterion {r.number} ({r.name}): {r.error or r.measured}" for r in outcome.failed],
    )
    print_command_result(result, json_output)
    raise typer.Exit(outcome.exit_code)


def _load_rows(source: Path) -> list[ResultRow]:
    if source.is_dir():
        paths = sorted(p for p in source.glob("*.csv"))
        if not paths:
            raise ConfigurationError(f"No CSV files in {source}", key="csv")
    else:
        paths = [source]
    return [row for path in paths for row in read_csv(path)]


@app.command("plot")
def plot(
    source: Path = typer.Argument(..., help="Results CSV or a directory of CSVs"),
    spec: Path = typer.Argument(..., help="Plot spec YAML"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Figure directory"),
    json_output: Optional[Path] = typer.Option(None, "--json", help="JSON summary file"),
) -> None:
    """Draw egen and erob curves from result CSVs."""
    start_time = time.time()
    try:
        rows = _load_rows(source)
        plot_spec = load_plot_spec(spec)
        directory = output_dir or (source if source.is_dir() else source.parent)
        figure = render(rows, plot_spec, directory)
    except RobustLabError as e:
        raise _fail(e)

    result = CommandResult(
        command="plot",
        timestamp=datetime.now(timezone.utc),
        duration_ms=(time.time() - start_time) * 1000,
        status="success" if figure else "warning",
        summary={"rows": len(rows), "panels": len(plot_spec.panels), "figure": str(figure or "-")},
        warnings=[] if figure else ["no rows matched the plot spec, nothing written"],
    )
    print_command_result(result, json_output)


@app.command("presets")
def presets() -> None:
    """List experiment presets and acceptance suites."""
    table = Table(title="Experiment presets")
    table.add_column("Preset", style="cyan")
    table.add_column("Experiments", justify="right")
    table.add_column("Rows", justify="right")
    table.add_column("Description", style="green")
    for name in PRESETS:
        configs = get_preset(name)
        table.add_row(
            name,
            str(len(configs)),
            str(sum(expected_rows(config) for config in configs)),
            PRESET_DESCRIPTIONS[name],
        )
    console.print(table)

    suites = Table(title="Acceptance suites")
    suites.add_column("Suite", style="cyan")
    suites.add_column("Criteria")
    for name, settings in SUITES.items():
        suites.add_row(name, ", ".join(f"{n} {CRITERIA[n].name}" for n in settings.criteria))
    console.print(suites)


def main() -> None:
    """Console script entry point."""
    app()


if __name__ == "__main__":
    main()
