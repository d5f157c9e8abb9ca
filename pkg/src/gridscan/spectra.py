"""Normalized DFT layer: spectra, frequency grids, conjugate reversal, windows."""

from dataclasses import dataclass, replace
from typing import Literal, Union

import numpy as np
import pandas as pd
import scipy.fft
from scipy.signal import windows

from .errors import InvalidSpecError, ShapeError
from .signals import DqTimeSeries, RealTimeSeries, Series

__all__ = [
    "Spectrum",
    "dft",
    "idft",
    "conj_reversed",
    "frequency_grid",
    "signed_frequency_grid",
    "hamming_window",
    "apply_window",
    "spectrum_to_frame",
]

WindowKind = Literal["rectangular", "hamming"]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """N-point DFT values with the unitary 1/√N normalization."""

    values: np.ndarray
    sample_period: float

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        if values.ndim != 1 or values.size < 1:
            raise ShapeError(f"spectrum values must be a non-empty vector, got shape {values.shape}")
        if not (self.sample_period > 0 and np.isfinite(self.sample_period)):
            raise InvalidSpecError(f"sample_period must be positive, got {self.sample_period}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sample_period", float(self.sample_period))

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def omegas(self) -> np.ndarray:
        return frequency_grid(self.n, self.sample_period)


def dft(series: Union[DqTimeSeries, RealTimeSeries]) -> Spectrum:
    """``X_k = N^{-1/2} Σ x_n e^{-j2πkn/N}`` for any N (no power-of-two restriction)."""
    return Spectrum(scipy.fft.fft(series.samples, norm="ortho"), series.sample_period)


def idft(spectrum: Spectrum) -> DqTimeSeries:
    return DqTimeSeries(scipy.fft.ifft(spectrum.values, norm="ortho"), spectrum.sample_period)


def conj_reversed(spectrum: Spectrum) -> Spectrum:
    """``out[k] = conj(X[(N - k) mod N])``, the DFT of ``conj(x)``."""
    n = spectrum.n
    return Spectrum(np.conj(spectrum.values[(-np.arange(n)) % n]), spectrum.sample_period)


def frequency_grid(n: int, sample_period: float) -> np.ndarray:
    """``ω_k = 2πk / (N Ts)`` for k = 0..N-1 in rad/s."""
    if n < 1:
        raise ShapeError(f"N must be >= 1, got {n}")
    if not sample_period > 0:
        raise InvalidSpecError(f"sample period must be positive, got {sample_period}")
    return 2.0 * np.pi * np.arange(n) / (n * sample_period)


def signed_frequency_grid(n: int, sample_period: float) -> np.ndarray:
    """Frequency grid with bins above N/2 mapped to ``ω_k - 2π/Ts``.

    This is the continuous frequency a complex dq spectrum line represents;
    the Nyquist bin of an even N stays positive.
    """
    omegas = frequency_grid(n, sample_period)
    k = np.arange(n)
    return np.where(k > n / 2, omegas - 2.0 * np.pi / sample_period, omegas)


def hamming_window(n: int) -> np.ndarray:
    """Symmetric Hamming window ``0.54 - 0.46 cos(2πn/(N-1))``."""
    if n < 2:
        raise ShapeError(f"a Hamming window needs at least 2 samples, got {n}")
    return windows.hamming(n, sym=True)


def apply_window(series: Series, kind: WindowKind = "rectangular") -> Series:
    if kind == "rectangular":
        return series
    if kind == "hamming":
        w = hamming_window(len(series))
        return replace(series, samples=series.samples * w)
    raise InvalidSpecError(f"unknown window {kind!r}; expected 'rectangular' or 'hamming'")


def spectrum_to_frame(spectrum: Spectrum) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "k": np.arange(spectrum.n),
            "omega_rad_s": spectrum.omegas,
            "re": spectrum.values.real,
            "im": spectrum.values.imag,
        }
    )
