"""CSV persistence with pandera validation on every read."""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
import pandera.errors
import pandera.pandas as pa

from .errors import IncompatibleDataError, MissingInputError, ShapeError
from .impedance import CHANNELS, ImpedanceFrfEstimate
from .lpm import ComplexTfEstimate
from .schemas import COMPLEX_PAIR, IMPEDANCE_FRF, SPECTRUM, STATE_VECTOR, TIME_SERIES_DQ, TIME_SERIES_REAL
from .signals import DqTimeSeries, RealTimeSeries
from .spectra import Spectrum, spectrum_to_frame

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
UNIFORM_SAMPLING_RTOL = 1e-9

PathLike = Union[str, Path]


def write_frame(df: pd.DataFrame, path: PathLike) -> Path:
    """Write a CSV with 17 significant digits so floats round-trip exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_validated(path: PathLike, schema: pa.DataFrameSchema) -> pd.DataFrame:
    """Read a CSV and validate it against ``schema``.

    Args:
        path: CSV file
        schema: Pandera schema the file must satisfy

    Returns:
        The validated DataFrame

    Raises:
        MissingInputError: The file does not exist
        IncompatibleDataError: The file violates the schema
    """
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"Data file not found: {path}")
    df = pd.read_csv(path)
    try:
        return schema.validate(df)
    except (pandera.errors.SchemaError, pandera.errors.SchemaErrors) as e:
        raise IncompatibleDataError(f"{path} does not match schema {schema.name}: {e}") from e


def _check_uniform(times: np.ndarray, sample_period: Optional[float], path: Path) -> float:
    if times.size < 2:
        if sample_period is None:
            raise ShapeError(f"{path}: cannot infer the sample period from a single sample")
        return sample_period
    ts = (times[-1] - times[0]) / (times.size - 1) if sample_period is None else sample_period
    expected = times[0] + np.arange(times.size) * ts
    if np.max(np.abs(times - expected)) > UNIFORM_SAMPLING_RTOL * max(ts, np.max(np.abs(times))):
        raise IncompatibleDataError(f"{path}: samples are not uniformly spaced at {ts} s")
    return ts


def dq_series_to_frame(series: DqTimeSeries) -> pd.DataFrame:
    return pd.DataFrame({"t": series.times, "d": series.d, "q": series.q})


def write_dq_series(series: DqTimeSeries, path: PathLike) -> Path:
    return write_frame(dq_series_to_frame(series), path)


def read_dq_series(path: PathLike, sample_period: Optional[float] = None) -> DqTimeSeries:
    """Read a ``t,d,q`` file; times must be uniform to 1 part in 1e9."""
    path = Path(path)
    df = read_validated(path, TIME_SERIES_DQ)
    ts = _check_uniform(df["t"].to_numpy(), sample_period, path)
    return DqTimeSeries(df["d"].to_numpy() + 1j * df["q"].to_numpy(), ts)


def write_real_series(series: RealTimeSeries, path: PathLike) -> Path:
    return write_frame(pd.DataFrame({"t": series.times, "val": series.samples}), path)


def read_real_series(path: PathLike, sample_period: Optional[float] = None) -> RealTimeSeries:
    path = Path(path)
    df = read_validated(path, TIME_SERIES_REAL)
    ts = _check_uniform(df["t"].to_numpy(), sample_period, path)
    return RealTimeSeries(df["val"].to_numpy(), ts, path.stem)


def write_state_vector(x: np.ndarray, path: PathLike) -> Path:
    x = np.asarray(x, dtype=float)
    return write_frame(pd.DataFrame({"index": np.arange(x.size), "value": x}), path)


def read_state_vector(path: PathLike) -> np.ndarray:
    df = read_validated(path, STATE_VECTOR).sort_values("index")
    return df["value"].to_numpy()


def frf_to_frame(frf: ImpedanceFrfEstimate) -> pd.DataFrame:
    columns: dict[str, np.ndarray] = {"k": np.arange(len(frf)), "f_hz": frf.frequencies_hz}
    for channel in CHANNELS:
        values = frf.channel(channel)
        columns[f"z_{channel}_re"] = values.real
        columns[f"z_{channel}_im"] = values.imag
    columns["valid"] = frf.valid
    return pd.DataFrame(columns)


def write_frf(frf: ImpedanceFrfEstimate, path: PathLike) -> Path:
    return write_frame(frf_to_frame(frf), path)


def read_frf(path: PathLike, n: int, sample_period: float) -> ImpedanceFrfEstimate:
    """Read an impedance FRF written on the positive lines of an N-point grid."""
    path = Path(path)
    df = read_validated(path, IMPEDANCE_FRF)
    k = df["k"].to_numpy()
    if not np.array_equal(k, np.arange(k.size)):
        raise IncompatibleDataError(f"{path}: bins must be 0..{k.size - 1} in order")
    expected = k / (n * sample_period)
    if not np.allclose(df["f_hz"].to_numpy(), expected, rtol=1e-9, atol=1e-9):
        raise IncompatibleDataError(f"{path}: frequency column does not match N={n}, Ts={sample_period}")
    values = {c: df[f"z_{c}_re"].to_numpy() + 1j * df[f"z_{c}_im"].to_numpy() for c in CHANNELS}
    return ImpedanceFrfEstimate(
        values["dd"], values["dq"], values["qd"], values["qq"], n, sample_period, df["valid"].to_numpy()
    )


def complex_pair_to_frame(est: ComplexTfEstimate) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "k": np.arange(est.n),
            "omega_rad_s": est.omegas,
            "gplus_re": est.gplus.real,
            "gplus_im": est.gplus.imag,
            "gminus_re": est.gminus.real,
            "gminus_im": est.gminus.imag,
            "transient_re": est.transient.real,
            "transient_im": est.transient.imag,
            "residual": est.residual_norm,
            "condition": est.condition_number,
            "rank": est.effective_rank,
            "valid": est.valid,
        }
    )


def write_complex_pair(est: ComplexTfEstimate, path: PathLike) -> Path:
    return write_frame(complex_pair_to_frame(est), path)


def read_complex_pair(path: PathLike) -> pd.DataFrame:
    """Validated per-line LPM estimate and diagnostics."""
    return read_validated(path, COMPLEX_PAIR)


def write_spectrum(spectrum: Spectrum, path: PathLike) -> Path:
    return write_frame(spectrum_to_frame(spectrum), path)


def read_spectrum(path: PathLike, sample_period: float) -> Spectrum:
    df = read_validated(path, SPECTRUM)
    return Spectrum(df["re"].to_numpy() + 1j * df["im"].to_numpy(), sample_period)
