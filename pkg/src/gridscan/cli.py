"""CLI interface for gridscan commands using Typer."""

import json
import sys
from pathlib import Path
from typing import List, NoReturn, Optional

import typer
from rich.console import Console
from rich.markup import escape

from .config import (
    DEFAULT_BANDS,
    ExperimentConfig,
    default_experiment_config,
    load_experiment_config,
    parse_band,
    parse_method_spec,
)
from .errors import GridscanError, IncompatibleDataError, MissingInputError
from .experiment import (
    ComparisonReport,
    identify as run_identify,
    evaluate as run_evaluate,
    load_dataset,
    render_table,
    run_comparison,
    simulate_dataset,
    without_noise,
    write_dataset,
    write_report,
)
from .logs import configure_logging
from .metrics import BandSelection

app = typer.Typer(
    name="gridscan",
    help="dq-frame grid impedance identification. Typical flow (with uv):\n\n"
    "1. uv run gridscan simulate --config configs/default.json --out run/dataset\n\n"
    "2. uv run gridscan identify --dataset run/dataset --method lpm:R=4\n\n"
    "3. uv run gridscan evaluate --estimates run/dataset/estimates --truth run/dataset/truth_frf.csv\n\n"
    "# or everything at once, with the comparison table\n\n"
    "uv run gridscan compare --config configs/default.json --out run",
)
console = Console()


@app.callback()
def _main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log pipeline milestones")) -> None:
    configure_logging(verbose)


def _fail(err: GridscanError) -> NoReturn:
    console.print(f"[red]Error: {escape(str(err))}[/red]", soft_wrap=True)
    sys.exit(err.exit_code)


def _load_config(config_path: Optional[str]) -> ExperimentConfig:
    if config_path is None:
        return default_experiment_config()
    return load_experiment_config(config_path)


@app.command()
def simulate(
    config_path: Optional[str] = typer.Option(None, "--config", help="Experiment config JSON (default: built-in)"),
    out: Optional[str] = typer.Option(None, "--out", help="Dataset directory (default: <output_dir>/dataset)"),
    no_noise: bool = typer.Option(False, "--no-noise", help="Record noise-free measurements"),
):
    """Simulate the configured grid and write a dataset directory."""
    try:
        config = _load_config(config_path)
        if no_noise:
            config = without_noise(config)
        out_dir = Path(out) if out else Path(config.output_dir) / "dataset"
        dataset = simulate_dataset(config)
        manifest = write_dataset(dataset, out_dir)
    except GridscanError as e:
        _fail(e)

    console.print(f"Simulated {dataset.n} samples on a {dataset.model.n_states}-state grid")
    console.print(f"[green]Dataset written: {out_dir} ({len(manifest.get_all_files())} files)[/green]")


@app.command()
def identify(
    dataset_dir: str = typer.Option(..., "--dataset", help="Dataset directory written by simulate"),
    method_specs: Optional[List[str]] = typer.Option(
        None, "--method", help="Method spec, e.g. lpm:R=4,l=18 or arx:order=2 (repeatable)"
    ),
    config_path: Optional[str] = typer.Option(None, "--config", help="Take methods from this config"),
    out: Optional[str] = typer.Option(None, "--out", help="Estimates directory (default: <dataset>/estimates)"),
    export_spectra: bool = typer.Option(False, "--export-spectra", help="Also write the V and I spectra"),
    workers: int = typer.Option(1, "--workers", min=1, help="LPM worker threads"),
):
    """Estimate the grid impedance from a dataset with one or more methods."""
    try:
        if method_specs:
            methods = tuple(parse_method_spec(s) for s in method_specs)
        elif config_path is not None:
            methods = load_experiment_config(config_path).methods
        else:
            methods = load_dataset(dataset_dir).config.methods
        out_dir = Path(out) if out else Path(dataset_dir) / "estimates"
        console.print(f"Identifying with {len(methods)} method(s)...")
        results = run_identify(dataset_dir, methods, out_dir, workers=workers, export_spectra=export_spectra)
    except GridscanError as e:
        _fail(e)

    for result in results:
        flagged = int((~result.impedance.valid).sum())
        note = f" [yellow]({flagged} flagged bins)[/yellow]" if flagged else ""
        console.print(f"  [green]✓ {result.method.label}[/green]{note}")
    console.print(f"[green]Estimates written: {out_dir}[/green]")


@app.command()
def evaluate(
    estimates_dir: str = typer.Option(..., "--estimates", help="Estimates directory written by identify"),
    truth: str = typer.Option(..., "--truth", help="Truth FRF CSV (truth_frf.csv of the dataset)"),
    band_specs: Optional[List[str]] = typer.Option(None, "--band", help="FMIN:FMAX in Hz (repeatable)"),
    config_path: Optional[str] = typer.Option(None, "--config", help="Take bands from this config"),
    out: Optional[str] = typer.Option(None, "--out", help="Report JSON (default: <estimates>/report.json)"),
):
    """Score estimates against the exact grid FRF over frequency bands."""
    try:
        if band_specs:
            bands = tuple(parse_band(s) for s in band_specs)
        elif config_path is not None:
            bands = load_experiment_config(config_path).bands
        else:
            bands = tuple(BandSelection(lo, hi) for lo, hi in DEFAULT_BANDS)
        entries = run_evaluate(estimates_dir, truth, bands)
        report_path = Path(out) if out else Path(estimates_dir) / "report.json"
        write_report(ComparisonReport(entries=entries), report_path)
    except GridscanError as e:
        _fail(e)

    console.print(render_table(entries))
    console.print(f"[green]Report written: {report_path}[/green]")


@app.command()
def compare(
    config_path: Optional[str] = typer.Option(None, "--config", help="Experiment config JSON (default: built-in)"),
    out: Optional[str] = typer.Option(None, "--out", help="Output directory (default: config output_dir)"),
    noise: Optional[bool] = typer.Option(None, "--noise/--no-noise", help="Override the configured noise"),
    workers: Optional[int] = typer.Option(None, "--workers", min=1, help="LPM worker threads"),
):
    """Simulate once, run every configured method and tabulate the accuracy."""
    try:
        config = _load_config(config_path)
        if noise is False:
            config = without_noise(config)
        elif noise and config.noise.accuracy_class == 0:
            console.print("[yellow]--noise given but the config's accuracy class is 0[/yellow]")
        out_dir = Path(out) if out else Path(config.output_dir)
        console.print(f"Comparing {len(config.methods)} method(s) over {len(config.bands)} band(s)...")
        report = run_comparison(config, out_dir, workers)
    except GridscanError as e:
        _fail(e)

    console.print(render_table(report.entries))
    console.print(f"[green]Report written: {out_dir / 'report.json'}[/green]")
    if not report.ok:
        for failure in report.failures:
            console.print(f"[red]✗ {failure['method']}: {escape(failure['error'])}[/red]", soft_wrap=True)
        sys.exit(1)


def _read_report_entries(path: Path) -> list:
    try:
        body = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise IncompatibleDataError(f"{path} is not a valid report: {e}") from e
    entries = body.get("entries") if isinstance(body, dict) else None
    if not isinstance(entries, list):
        raise IncompatibleDataError(f"{path} has no 'entries' list")
    return entries


@app.command()
def show(
    report: str = typer.Argument(..., help="report.json written by evaluate or compare"),
    json_output: bool = typer.Option(False, "--json", help="Print the entries as JSON for machine parsing"),
):
    """Render a saved report as a table."""
    path = Path(report)
    if not path.exists():
        _fail(MissingInputError(f"Report not found: {path}"))
    try:
        entries = _read_report_entries(path)
        table = None if json_output else render_table(entries)
    except GridscanError as e:
        _fail(e)
    except (KeyError, TypeError, ValueError) as e:
        _fail(IncompatibleDataError(f"{path}: malformed report entry ({e!r})"))
    if table is None:
        console.print_json(data=entries)
    else:
        console.print(table)
