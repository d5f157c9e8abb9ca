"""Fit% and relative H∞ error over a frequency band."""

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import EmptyBandError, IncompatibleDataError, InvalidSpecError, ShapeError
from .impedance import CHANNELS, ImpedanceFrfEstimate

logger = logging.getLogger(__name__)

__all__ = [
    "BandSelection",
    "ChannelScores",
    "fit_percent",
    "sigma_max_2x2",
    "relative_hinf_error",
    "select_band",
    "channel_scores",
    "round_fit",
]


@dataclass(frozen=True)
class BandSelection:
    f_min: float
    f_max: float

    def __post_init__(self) -> None:
        if not 0 <= self.f_min < self.f_max:
            raise InvalidSpecError(f"band needs 0 <= f_min < f_max, got [{self.f_min}, {self.f_max}]")

    @property
    def label(self) -> str:
        return f"{self.f_min:g}-{self.f_max:g}Hz"

    def to_list(self) -> list[float]:
        return [self.f_min, self.f_max]


def fit_percent(estimate: np.ndarray, truth: np.ndarray) -> float:
    """``(1 - ‖Ẑ - Z‖² / ‖Z - mean(Z)‖²) · 100`` with squared Euclidean norms."""
    estimate = np.asarray(estimate, dtype=complex)
    truth = np.asarray(truth, dtype=complex)
    if estimate.shape != truth.shape or truth.ndim != 1:
        raise ShapeError(f"estimate {estimate.shape} and truth {truth.shape} must be equal-length vectors")
    if truth.size < 2:
        raise ShapeError("Fit% needs at least two bins")
    spread = np.sum(np.abs(truth - truth.mean()) ** 2)
    if spread == 0:
        raise InvalidSpecError("truth is constant over the band; Fit% is undefined")
    return float((1.0 - np.sum(np.abs(estimate - truth) ** 2) / spread) * 100.0)


def sigma_max_2x2(m: np.ndarray) -> np.ndarray:
    """Largest singular value of one or a stack of 2×2 matrices, in closed form.

    Uses the larger eigenvalue of ``MᴴM = [[a, b], [b*, c]]``.
    """
    m = np.asarray(m, dtype=complex)
    a = np.abs(m[..., 0, 0]) ** 2 + np.abs(m[..., 1, 0]) ** 2
    c = np.abs(m[..., 0, 1]) ** 2 + np.abs(m[..., 1, 1]) ** 2
    b = np.conj(m[..., 0, 0]) * m[..., 0, 1] + np.conj(m[..., 1, 0]) * m[..., 1, 1]
    lam = 0.5 * (a + c) + np.sqrt((0.5 * (a - c)) ** 2 + np.abs(b) ** 2)
    return np.sqrt(lam)


def relative_hinf_error(estimates: np.ndarray, truths: np.ndarray) -> float:
    """``max σ̄(Ẑ - Z) / max σ̄(Z)`` over the supplied bins."""
    estimates = np.asarray(estimates, dtype=complex)
    truths = np.asarray(truths, dtype=complex)
    if estimates.shape != truths.shape or truths.ndim != 3 or truths.shape[0] < 1:
        raise ShapeError(f"expected matching (K, 2, 2) stacks, got {estimates.shape} and {truths.shape}")
    peak = float(np.max(sigma_max_2x2(truths)))
    if peak == 0:
        raise InvalidSpecError("truth is identically zero; relative H-infinity error is undefined")
    return float(np.max(sigma_max_2x2(estimates - truths))) / peak


def select_band(frf: ImpedanceFrfEstimate, band: BandSelection) -> np.ndarray:
    """Contiguous bins ``round(f_min N Ts) .. round(f_max N Ts)`` present in ``frf``."""
    nyquist = 0.5 / frf.sample_period
    if band.f_max > nyquist * (1 + 1e-12):
        raise InvalidSpecError(f"band upper edge {band.f_max} Hz exceeds Nyquist {nyquist} Hz")
    scale = frf.n * frf.sample_period
    lo = int(np.round(band.f_min * scale))
    hi = min(int(np.round(band.f_max * scale)), len(frf) - 1)
    if hi < lo:
        raise EmptyBandError(f"band {band.label} selects no bins of the {len(frf)}-bin estimate")
    return np.arange(lo, hi + 1)


@dataclass(frozen=True)
class ChannelScores:
    fit_dd: float
    fit_dq: float
    fit_qd: float
    fit_qq: float
    rel_hinf: float
    n_valid: int
    n_flagged: int

    @property
    def fits(self) -> dict[str, float]:
        return {c: getattr(self, f"fit_{c}") for c in CHANNELS}

    def to_dict(self) -> dict[str, Any]:
        return {
            "fit_pct": self.fits,
            "rel_hinf": self.rel_hinf,
            "n_valid": self.n_valid,
            "n_flagged": self.n_flagged,
        }


def _truth_bins(estimate: ImpedanceFrfEstimate, truth: ImpedanceFrfEstimate, bins: np.ndarray) -> np.ndarray:
    """Truth bins at the same frequencies as ``bins`` of the estimate."""
    if not np.isclose(estimate.sample_period, truth.sample_period, rtol=1e-9, atol=0.0):
        raise IncompatibleDataError(
            f"sample periods differ: estimate {estimate.sample_period} s, truth {truth.sample_period} s"
        )
    f_est = estimate.frequencies_hz[bins]
    position = f_est * truth.n * truth.sample_period
    matched = np.round(position).astype(int)
    if np.any(np.abs(position - matched) > 1e-6) or np.any(matched >= len(truth)):
        raise IncompatibleDataError(
            f"estimate grid ({estimate.n} points) does not lie on the truth grid ({truth.n} points)"
        )
    return matched


def channel_scores(
    estimate: ImpedanceFrfEstimate, truth: ImpedanceFrfEstimate, band: BandSelection
) -> ChannelScores:
    """Per-channel Fit% and relative H∞ error over the valid bins of ``band``.

    Estimates on a coarser grid are compared with the truth at matching frequencies.
    """
    bins = select_band(estimate, band)
    truth_bins = _truth_bins(estimate, truth, bins)
    est = estimate.as_matrices()[bins]
    ref = truth.as_matrices()[truth_bins]
    valid = estimate.valid[bins] & np.all(np.isfinite(est), axis=(1, 2))
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise EmptyBandError(f"no valid bins in band {band.label}")
    est, ref = est[valid], ref[valid]
    fits = {c: fit_percent(est[:, i, j], ref[:, i, j]) for c, (i, j) in zip(CHANNELS, np.ndindex(2, 2))}
    return ChannelScores(
        fit_dd=fits["dd"],
        fit_dq=fits["dq"],
        fit_qd=fits["qd"],
        fit_qq=fits["qq"],
        rel_hinf=relative_hinf_error(est, ref),
        n_valid=n_valid,
        n_flagged=int(bins.size - n_valid),
    )


def round_fit(value: float) -> float:
    """One decimal, as Fit% is tabulated."""
    return float(np.round(value, 1))
