"""Pipeline orchestration: simulate a dataset, run estimators, score them, tabulate."""

import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
from rich.console import Console
from rich.table import Table

from .baselines import arx_fit, arx_impedance, etfe_impedance, sequential_perturbation_estimate, split_record
from .config import ArxMethod, EtfeMethod, ExperimentConfig, LpmMethod, MethodSpec, SeqPertMethod
from .errors import (
    GridscanError,
    IncompatibleDataError,
    MissingInputError,
    RankDeficiencyError,
    ShapeError,
    UnderdeterminedError,
)
from .grid import (
    StateSpaceGrid,
    add_measurement_noise,
    build_ladder_grid,
    simulate_with_injection,
    transient_initial_state,
    true_impedance_frf,
)
from .impedance import ImpedanceFrfEstimate, complex_pair_to_impedance
from .lpm import ComplexTfEstimate, estimate_frf
from .manifest import Manifest
from .metrics import BandSelection, channel_scores, round_fit
from .reader import (
    read_dq_series,
    read_frf,
    read_state_vector,
    write_complex_pair,
    write_dq_series,
    write_frf,
    write_spectrum,
    write_state_vector,
)
from .schemas import COMPLEX_PAIR, IMPEDANCE_FRF, SPECTRUM, STATE_VECTOR, TIME_SERIES_DQ
from .signals import DqTimeSeries, generate_dq_rbs, remove_mean
from .spectra import Spectrum, dft

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRUTH_FILE = "truth_frf.csv"
DATASET_FILES = ("i.csv", "v.csv", "i_clean.csv", "v_clean.csv", TRUTH_FILE, "x0.csv")
TABLE_WIDTH = 120


@dataclass(frozen=True, eq=False)
class Dataset:
    """One simulated measurement record with its ground truth."""

    config: ExperimentConfig
    model: StateSpaceGrid
    current: DqTimeSeries
    voltage: DqTimeSeries
    current_clean: DqTimeSeries
    voltage_clean: DqTimeSeries
    truth: ImpedanceFrfEstimate
    x0: np.ndarray

    @property
    def n(self) -> int:
        return len(self.voltage)

    @property
    def sample_period(self) -> float:
        return self.voltage.sample_period


@dataclass(frozen=True, eq=False)
class MethodResult:
    method: MethodSpec
    impedance: ImpedanceFrfEstimate
    complex_tf: Optional[ComplexTfEstimate] = None


@dataclass
class ComparisonReport:
    entries: list[dict[str, Any]] = field(default_factory=list)
    failures: list[dict[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {"entries": self.entries, "failures": self.failures}


def without_noise(config: ExperimentConfig) -> ExperimentConfig:
    """Same experiment with accuracy class 0 (noise-free measurements)."""
    return config.model_copy(update={"noise": config.noise.model_copy(update={"accuracy_class": 0.0})})


def simulate_dataset(config: ExperimentConfig) -> Dataset:
    """Excite the configured grid with the dq RBS and record PCC voltage and current.

    The grid starts from a random state of the configured magnitude, so the
    record carries a transient. Noise is added after simulation.
    """
    model = build_ladder_grid(config.grid)
    ts = config.sample_period
    reference = generate_dq_rbs(config.excitation_spec, ts)
    x0 = transient_initial_state(model, config.transient_magnitude, config.transient_seed)
    current, voltage = simulate_with_injection(model, reference, x0, config.injection)
    logger.info("Simulated %d samples at Ts = %g s", len(reference), ts)
    return Dataset(
        config=config,
        model=model,
        current=add_measurement_noise(current, config.noise, "i"),
        voltage=add_measurement_noise(voltage, config.noise, "v"),
        current_clean=current,
        voltage_clean=voltage,
        truth=true_impedance_frf(model, len(reference), ts),
        x0=x0,
    )


def write_dataset(dataset: Dataset, directory: PathLike) -> Manifest:
    """Write the dataset CSVs and a manifest that reproduces them."""
    directory = Path(directory)
    manifest = Manifest.in_directory(directory)
    series = {
        "i.csv": dataset.current,
        "v.csv": dataset.voltage,
        "i_clean.csv": dataset.current_clean,
        "v_clean.csv": dataset.voltage_clean,
    }
    for name, values in series.items():
        write_dq_series(values, directory / name)
        manifest.add_file(name, TIME_SERIES_DQ, len(values))
    write_frf(dataset.truth, directory / TRUTH_FILE)
    manifest.add_file(TRUTH_FILE, IMPEDANCE_FRF, len(dataset.truth))
    write_state_vector(dataset.x0, directory / "x0.csv")
    manifest.add_file("x0.csv", STATE_VECTOR, dataset.x0.size)

    config = dataset.config
    manifest.set("kind", "dataset")
    manifest.set("config", config.to_dict())
    manifest.set("seeds", config.seeds())
    manifest.set("n", dataset.n)
    manifest.set("Ts", dataset.sample_period)
    manifest.set("omega_g", config.omega_g)
    manifest.set("grid_states", dataset.model.n_states)
    manifest.save()
    logger.info("Wrote dataset to %s", directory)
    return manifest


def load_dataset(directory: PathLike) -> Dataset:
    """Read a dataset directory back, verifying the manifest and file hashes.

    Raises:
        MissingInputError: Manifest or data files are absent
        IncompatibleDataError: A file was modified after it was written
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingInputError(f"Dataset directory not found: {directory}")
    manifest = Manifest.in_directory(directory)
    manifest.load()
    if manifest.get("kind") != "dataset":
        raise IncompatibleDataError(f"{manifest.manifest_path} does not describe a dataset")
    manifest.verify_files(list(DATASET_FILES))

    config = ExperimentConfig.from_dict(manifest.get("config"))
    n, ts = int(manifest.get("n")), float(manifest.get("Ts"))
    model = build_ladder_grid(config.grid)
    series = {name: read_dq_series(directory / name, ts) for name in ("i.csv", "v.csv", "i_clean.csv", "v_clean.csv")}
    if any(len(s) != n for s in series.values()):
        raise IncompatibleDataError(f"{directory}: series lengths do not match N = {n}")
    x0 = read_state_vector(directory / "x0.csv")
    if x0.size != model.n_states:
        raise IncompatibleDataError(f"x0 has {x0.size} entries, the grid has {model.n_states} states")
    return Dataset(
        config=config,
        model=model,
        current=series["i.csv"],
        voltage=series["v.csv"],
        current_clean=series["i_clean.csv"],
        voltage_clean=series["v_clean.csv"],
        truth=read_frf(directory / TRUTH_FILE, n, ts),
        x0=x0,
    )


def _spectra(v: DqTimeSeries, i: DqTimeSeries) -> tuple[Spectrum, Spectrum]:
    return dft(remove_mean(v)), dft(remove_mean(i))


def run_method(
    method: MethodSpec,
    v: DqTimeSeries,
    i: DqTimeSeries,
    workers: int = 1,
    grid_is_symmetric: Optional[bool] = None,
) -> MethodResult:
    """Run one estimator on a (v, i) record.

    Args:
        method: Parsed method spec
        v: PCC voltage record
        i: Injected current record
        workers: LPM thread count
        grid_is_symmetric: When known to be False, ETFE warns that it assumes symmetry

    Returns:
        MethodResult with the impedance FRF (and the complex pair for LPM)

    Raises:
        IncompatibleDataError: The method cannot be applied to this record
    """
    if len(v) != len(i):
        raise IncompatibleDataError(f"v and i lengths differ: {len(v)} vs {len(i)}")
    started = time.perf_counter()
    try:
        if isinstance(method, LpmMethod):
            V, I = _spectra(v, i)
            pair = estimate_frf(V, I, method.lpm_config(), workers=workers)
            result = MethodResult(method, complex_pair_to_impedance(pair), pair)
        elif isinstance(method, ArxMethod):
            v0, i0 = remove_mean(v), remove_mean(i)
            model = arx_fit(
                np.column_stack([i0.d, i0.q]),
                np.column_stack([v0.d, v0.q]),
                method.order,
                method.order,
                v.sample_period,
            )
            result = MethodResult(method, arx_impedance(model, len(v)))
        elif isinstance(method, SeqPertMethod):
            exp1, exp2 = split_record(remove_mean(v), remove_mean(i))
            result = MethodResult(method, sequential_perturbation_estimate(exp1, exp2, method.window))
        elif isinstance(method, EtfeMethod):
            if grid_is_symmetric is False:
                logger.warning("etfe assumes a dq-symmetric grid; this dataset's grid is asymmetric")
            V, I = _spectra(v, i)
            result = MethodResult(method, etfe_impedance(V, I))
        else:
            raise TypeError(f"unsupported method {method!r}")
    except (UnderdeterminedError, ShapeError, RankDeficiencyError) as e:
        raise IncompatibleDataError(f"{method.label}: {e}") from e
    logger.info("%s finished in %.2f s", method.label, time.perf_counter() - started)
    return result


def score(result: MethodResult, truth: ImpedanceFrfEstimate, bands: Sequence[BandSelection]) -> list[dict[str, Any]]:
    """One report entry per band."""
    entries = []
    for band in bands:
        scores = channel_scores(result.impedance, truth, band)
        entries.append(
            {
                "method": result.method.label,
                "kind": result.method.kind,
                "order": result.method.model_order,
                "band_hz": band.to_list(),
                **scores.to_dict(),
            }
        )
    return entries


def write_estimates(
    results: Sequence[MethodResult],
    directory: PathLike,
    dataset: Dataset,
    spectra: Optional[tuple[Spectrum, Spectrum]] = None,
) -> Manifest:
    """Write z_frf_<label>.csv (and gplus_gminus_<label>.csv for LPM) with an estimates manifest."""
    directory = Path(directory)
    manifest = Manifest.in_directory(directory)
    manifest.load(required=False)
    methods = dict(manifest.get("methods", {}))
    for result in results:
        label = result.method.label
        frf_name = f"z_frf_{label}.csv"
        write_frf(result.impedance, directory / frf_name)
        manifest.add_file(frf_name, IMPEDANCE_FRF, len(result.impedance))
        entry: dict[str, Any] = {
            "kind": result.method.kind,
            "order": result.method.model_order,
            "spec": result.method.model_dump(mode="json", by_alias=True),
            "n": result.impedance.n,
            "frf": frf_name,
        }
        if result.complex_tf is not None:
            pair_name = f"gplus_gminus_{label}.csv"
            write_complex_pair(result.complex_tf, directory / pair_name)
            manifest.add_file(pair_name, COMPLEX_PAIR, result.complex_tf.n)
            entry["complex_pair"] = pair_name
        methods[label] = entry
    if spectra is not None:
        for name, spectrum in zip(("spectrum_v.csv", "spectrum_i.csv"), spectra):
            write_spectrum(spectrum, directory / name)
            manifest.add_file(name, SPECTRUM, spectrum.n)

    manifest.set("kind", "estimates")
    manifest.set("methods", dict(sorted(methods.items())))
    manifest.set("n", dataset.n)
    manifest.set("Ts", dataset.sample_period)
    manifest.set("grid", dataset.config.grid.model_dump(mode="json"))
    manifest.save()
    return manifest


def identify(
    dataset_dir: PathLike,
    methods: Sequence[MethodSpec],
    out_dir: PathLike,
    workers: int = 1,
    export_spectra: bool = False,
) -> list[MethodResult]:
    """Load a dataset, run every method on the noisy record and write the estimates."""
    dataset = load_dataset(dataset_dir)
    results = [
        run_method(m, dataset.voltage, dataset.current, workers, dataset.config.grid.is_symmetric) for m in methods
    ]
    spectra = _spectra(dataset.voltage, dataset.current) if export_spectra else None
    write_estimates(results, out_dir, dataset, spectra)
    return results


def _read_truth(truth_path: Path, n: int, ts: float, grid: dict[str, Any]) -> ImpedanceFrfEstimate:
    if not truth_path.exists():
        raise MissingInputError(f"Truth file not found: {truth_path}")
    sibling = Manifest.in_directory(truth_path.parent)
    sibling.load(required=False)
    if sibling.get("kind") == "dataset":
        if sibling.get("config", {}).get("grid") != grid:
            raise IncompatibleDataError(f"estimates were made on a different grid than {truth_path}")
        if sibling.get("n") != n or sibling.get("Ts") != ts:
            raise IncompatibleDataError(f"estimates use N={n}, Ts={ts}; {truth_path} does not")
    truth = read_frf(truth_path, n, ts)
    if len(truth) != n // 2:
        raise IncompatibleDataError(f"{truth_path} has {len(truth)} bins, expected {n // 2}")
    return truth


def evaluate(estimates_dir: PathLike, truth_path: PathLike, bands: Sequence[BandSelection]) -> list[dict[str, Any]]:
    """Score every estimate recorded in ``estimates_dir`` against a truth FRF file.

    Raises:
        MissingInputError: Estimates manifest, estimate or truth files are absent
        IncompatibleDataError: Grid, N or Ts differ between estimates and truth
    """
    estimates_dir = Path(estimates_dir)
    manifest = Manifest.in_directory(estimates_dir)
    manifest.load()
    if manifest.get("kind") != "estimates":
        raise IncompatibleDataError(f"{manifest.manifest_path} does not describe estimates")
    methods = manifest.get("methods", {})
    manifest.verify_files([entry["frf"] for entry in methods.values()])
    n, ts = int(manifest.get("n")), float(manifest.get("Ts"))
    truth = _read_truth(Path(truth_path), n, ts, manifest.get("grid"))

    entries = []
    for label, entry in methods.items():
        estimate = read_frf(estimates_dir / entry["frf"], int(entry["n"]), ts)
        for band in bands:
            scores = channel_scores(estimate, truth, band)
            entries.append(
                {
                    "method": label,
                    "kind": entry["kind"],
                    "order": entry["order"],
                    "band_hz": band.to_list(),
                    **scores.to_dict(),
                }
            )
    return entries


def run_comparison(
    config: ExperimentConfig, out_dir: PathLike, workers: Optional[int] = None
) -> ComparisonReport:
    """Simulate once, run every configured method, score every band.

    A failing method is recorded in ``failures`` and the remaining methods
    still run. ``report.json`` and ``table.txt`` are written either way.
    """
    out_dir = Path(out_dir)
    workers = config.lpm_workers if workers is None else workers
    dataset = simulate_dataset(config)
    write_dataset(dataset, out_dir / "dataset")

    report = ComparisonReport()
    results = []
    for method in config.methods:
        try:
            result = run_method(method, dataset.voltage, dataset.current, workers, config.grid.is_symmetric)
            report.entries.extend(score(result, dataset.truth, config.bands))
            results.append(result)
        except GridscanError as e:
            logger.error("%s failed: %s", method.label, e)
            report.failures.append({"method": method.label, "error": str(e)})
    if results:
        write_estimates(results, out_dir / "estimates", dataset)

    write_report(report, out_dir / "report.json", config)
    (out_dir / "table.txt").write_text(render_text(report.entries))
    return report


def write_report(report: ComparisonReport, path: PathLike, config: Optional[ExperimentConfig] = None) -> Path:
    """JSON report; floats are written with shortest round-trip repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body: dict[str, Any] = report.to_dict()
    if config is not None:
        body = {"config": config.to_dict(), "seeds": config.seeds(), **body}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


def render_table(entries: Sequence[dict[str, Any]], title: str = "Accuracy comparison") -> Table:
    """Rows keyed by (method, order, band) with four Fit% columns and the relative H∞ error."""
    table = Table(title=title)
    table.add_column("Method", style="cyan")
    table.add_column("Order", justify="right")
    table.add_column("Band [Hz]", style="yellow")
    for channel in ("dd", "dq", "qd", "qq"):
        table.add_column(f"Fit {channel} %", justify="right")
    table.add_column("rel H∞", justify="right", style="magenta")
    table.add_column("Flagged", justify="right")
    for entry in entries:
        lo, hi = entry["band_hz"]
        table.add_row(
            entry["kind"],
            "-" if entry["order"] is None else str(entry["order"]),
            f"{lo:g}-{hi:g}",
            *(f"{round_fit(entry['fit_pct'][c]):.1f}" for c in ("dd", "dq", "qd", "qq")),
            f"{entry['rel_hinf']:.4g}",
            str(entry["n_flagged"]),
        )
    return table


def render_text(entries: Sequence[dict[str, Any]]) -> str:
    """Plain aligned-text rendering of :func:`render_table` at a fixed width."""
    console = Console(file=io.StringIO(), width=TABLE_WIDTH, record=True, color_system=None)
    console.print(render_table(entries))
    return console.export_text()
