"""Comparison estimators: ETFE, two-experiment sequential perturbation, MIMO ARX."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import InvalidSpecError, RankDeficiencyError, ShapeError
from .impedance import ImpedanceFrfEstimate, symmetric_complex_to_impedance
from .signals import DqTimeSeries, RealTimeSeries
from .spectra import Spectrum, WindowKind, apply_window, frequency_grid

logger = logging.getLogger(__name__)

__all__ = [
    "EtfeEstimate",
    "etfe",
    "etfe_impedance",
    "split_record",
    "sequential_perturbation_estimate",
    "ArxModel",
    "arx_fit",
    "arx_frf",
    "arx_impedance",
    "arx_prediction_errors",
]

SINGULAR_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class EtfeEstimate:
    values: np.ndarray
    valid: np.ndarray
    sample_period: float


def etfe(V: Spectrum, I: Spectrum, floor: float = 1e-12) -> EtfeEstimate:
    """Per-line ratio V_k / I_k; lines with |I_k| < floor·max|I| are NaN and invalid."""
    if V.n != I.n:
        raise ShapeError(f"V and I lengths differ: {V.n} vs {I.n}")
    magnitude = np.abs(I.values)
    threshold = floor * magnitude.max()
    valid = magnitude > threshold if threshold > 0 else np.zeros(I.n, dtype=bool)
    values = np.full(I.n, np.nan, dtype=complex)
    values[valid] = V.values[valid] / I.values[valid]
    return EtfeEstimate(values, valid, V.sample_period)


def etfe_impedance(V: Spectrum, I: Spectrum, floor: float = 1e-12) -> ImpedanceFrfEstimate:
    """ETFE mapped through the symmetric extraction (assumes G₋ ≡ 0)."""
    estimate = etfe(V, I, floor)
    return symmetric_complex_to_impedance(estimate.values, estimate.sample_period, estimate.valid)


def split_record(
    v: DqTimeSeries, i: DqTimeSeries
) -> tuple[tuple[DqTimeSeries, DqTimeSeries], tuple[DqTimeSeries, DqTimeSeries]]:
    """Halve one record into two experiments; an odd trailing sample is dropped."""
    if len(v) != len(i):
        raise ShapeError(f"v and i lengths differ: {len(v)} vs {len(i)}")
    half = len(v) // 2
    if half < 2:
        raise ShapeError(f"record of {len(v)} samples is too short to split")
    ts = v.sample_period
    first = (DqTimeSeries(v.samples[:half], ts), DqTimeSeries(i.samples[:half], ts))
    second = (DqTimeSeries(v.samples[half : 2 * half], ts), DqTimeSeries(i.samples[half : 2 * half], ts))
    return first, second


def _channel_spectra(series: DqTimeSeries, window: WindowKind) -> np.ndarray:
    """DFT of the real d and q channels after windowing, shape (N, 2)."""
    windowed = apply_window(series, window)
    return np.column_stack(
        [scipy.fft.fft(windowed.samples.real, norm="ortho"), scipy.fft.fft(windowed.samples.imag, norm="ortho")]
    )


def sequential_perturbation_estimate(
    exp1: tuple[DqTimeSeries, DqTimeSeries],
    exp2: tuple[DqTimeSeries, DqTimeSeries],
    window: WindowKind = "hamming",
) -> ImpedanceFrfEstimate:
    """Solve ``[V¹ V²] = Z_k [I¹ I²]`` per line from two (v, i) experiments.

    Lines whose current matrix has condition number above 1e12 are flagged.
    The estimate lives on the experiments' own grid (k = 0..N_e/2-1).
    """
    (v1, i1), (v2, i2) = exp1, exp2
    n = len(v1)
    ts = v1.sample_period
    for series in (i1, v2, i2):
        if len(series) != n:
            raise ShapeError("both experiments need v and i of equal length")
        if not np.isclose(series.sample_period, ts, rtol=1e-12, atol=0.0):
            raise ShapeError("both experiments need the same sample period")

    bins = np.arange(n // 2)
    V = np.stack([_channel_spectra(v1, window), _channel_spectra(v2, window)], axis=2)[bins]
    I = np.stack([_channel_spectra(i1, window), _channel_spectra(i2, window)], axis=2)[bins]

    s = np.linalg.svd(I, compute_uv=False)
    condition = np.divide(s[:, 0], s[:, 1], out=np.full(bins.size, np.inf), where=s[:, 1] > 0)
    valid = condition <= SINGULAR_CONDITION

    z = np.full((bins.size, 2, 2), np.nan, dtype=complex)
    if valid.any():
        # Z I = V  <=>  I^T Z^T = V^T
        z_t = np.linalg.solve(np.swapaxes(I[valid], 1, 2), np.swapaxes(V[valid], 1, 2))
        z[valid] = np.swapaxes(z_t, 1, 2)
    flagged = int(np.count_nonzero(~valid))
    if flagged:
        logger.warning("sequential perturbation: %d of %d lines have a singular current matrix", flagged, bins.size)
    return ImpedanceFrfEstimate.from_matrices(z, n, ts, valid)


@dataclass(frozen=True, eq=False)
class ArxModel:
    """``y[n] + Σ A_m y[n-m] = Σ B_m u[n-m] + e[n]`` with 2×2 real coefficient matrices."""

    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    sample_period: float

    def __post_init__(self) -> None:
        a = np.asarray(self.a_coeffs, dtype=float).reshape(-1, 2, 2)
        b = np.asarray(self.b_coeffs, dtype=float).reshape(-1, 2, 2)
        object.__setattr__(self, "a_coeffs", a)
        object.__setattr__(self, "b_coeffs", b)

    @property
    def na(self) -> int:
        return self.a_coeffs.shape[0]

    @property
    def nb(self) -> int:
        return self.b_coeffs.shape[0]

    @property
    def max_lag(self) -> int:
        return max(self.na, self.nb)

    def companion(self) -> np.ndarray:
        """Block companion matrix of the autoregressive part."""
        na = self.na
        if na == 0:
            return np.zeros((0, 0))
        top = np.hstack([-a for a in self.a_coeffs])
        if na == 1:
            return top
        shift = np.hstack([np.eye(2 * (na - 1)), np.zeros((2 * (na - 1), 2))])
        return np.vstack([top, shift])

    def is_stable(self) -> bool:
        m = self.companion()
        return m.size == 0 or bool(np.max(np.abs(np.linalg.eigvals(m))) < 1.0)

    def simulate(self, u: np.ndarray, noise: Optional[np.ndarray] = None) -> np.ndarray:
        """Output for input u (N, 2) from rest, with optional equation noise e (N, 2)."""
        u = np.asarray(u, dtype=float)
        if u.ndim != 2 or u.shape[1] != 2:
            raise ShapeError(f"u must have shape (N, 2), got {u.shape}")
        e = np.zeros_like(u) if noise is None else np.asarray(noise, dtype=float)
        if e.shape != u.shape:
            raise ShapeError("noise must match the input shape")
        y = np.zeros_like(u)
        for t in range(u.shape[0]):
            acc = e[t].copy()
            for m in range(1, min(self.na, t) + 1):
                acc -= self.a_coeffs[m - 1] @ y[t - m]
            for m in range(1, min(self.nb, t) + 1):
                acc += self.b_coeffs[m - 1] @ u[t - m]
            y[t] = acc
        return y


def _as_matrix(channels) -> np.ndarray:
    if isinstance(channels, np.ndarray):
        out = np.asarray(channels, dtype=float)
    else:
        d, q = channels
        d = d.samples if isinstance(d, RealTimeSeries) else np.asarray(d, dtype=float)
        q = q.samples if isinstance(q, RealTimeSeries) else np.asarray(q, dtype=float)
        if d.shape != q.shape:
            raise ShapeError("d and q channels differ in length")
        out = np.column_stack([d, q])
    if out.ndim != 2 or out.shape[1] != 2:
        raise ShapeError(f"expected two channels, got shape {out.shape}")
    return out


def _arx_regressors(u: np.ndarray, y: np.ndarray, na: int, nb: int) -> tuple[np.ndarray, np.ndarray]:
    """Regressor rows ``[-y[n-1] .. -y[n-na] | u[n-1] .. u[n-nb]]`` and targets y[n]."""
    start = max(na, nb)
    n = y.shape[0]
    columns = [-y[start - m : n - m] for m in range(1, na + 1)]
    columns += [u[start - m : n - m] for m in range(1, nb + 1)]
    phi = np.hstack(columns) if columns else np.zeros((n - start, 0))
    return phi, y[start:]


def arx_fit(u, y, na: int, nb: int, sample_period: float = 1e-4) -> ArxModel:
    """Joint least-squares fit of both outputs.

    Args:
        u: Input channels (d, q) as RealTimeSeries pair or an (N, 2) array
        y: Output channels, same layout
        na: Output-lag order
        nb: Input-lag order
        sample_period: Ts attached to the model (taken from u when it is a series)

    Returns:
        ArxModel minimizing the one-step-ahead prediction error over n >= max(na, nb)

    Raises:
        RankDeficiencyError: Remaining regressor columns are linearly dependent
    """
    if na < 0 or nb < 0:
        raise InvalidSpecError(f"ARX orders must be >= 0, got na={na}, nb={nb}")
    if not isinstance(u, np.ndarray) and isinstance(u[0], RealTimeSeries):
        sample_period = u[0].sample_period
    U, Y = _as_matrix(u), _as_matrix(y)
    if U.shape != Y.shape:
        raise ShapeError(f"u and y lengths differ: {U.shape[0]} vs {Y.shape[0]}")
    if U.shape[0] <= max(na, nb) + 10:
        raise ShapeError(f"{U.shape[0]} samples are too few for ARX({na}, {nb})")

    phi, target = _arx_regressors(U, Y, na, nb)
    # identically zero regressors (e.g. y ≡ 0) carry no information; their coefficients are 0
    active = np.linalg.norm(phi, axis=0) > 0
    theta = np.zeros((phi.shape[1], 2))
    if active.any():
        solution, _, rank, _ = scipy.linalg.lstsq(phi[:, active], target)
        if rank < active.sum():
            raise RankDeficiencyError(
                f"ARX({na}, {nb}) regression has rank {rank} for {int(active.sum())} active columns"
            )
        theta[active] = solution

    coeffs = theta.T.reshape(2, na + nb, 2).transpose(1, 0, 2)
    model = ArxModel(coeffs[:na], coeffs[na:], sample_period)
    if not model.is_stable():
        logger.warning("ARX(%d, %d) model is unstable", na, nb)
    return model


def arx_prediction_errors(model: ArxModel, u, y) -> np.ndarray:
    """One-step-ahead residuals e[n] for n >= max(na, nb), shape (N - max_lag, 2)."""
    U, Y = _as_matrix(u), _as_matrix(y)
    phi, target = _arx_regressors(U, Y, model.na, model.nb)
    theta = np.concatenate([model.a_coeffs, model.b_coeffs]).transpose(1, 0, 2).reshape(2, -1).T
    return target - phi @ theta


def arx_frf(model: ArxModel, omegas) -> np.ndarray:
    """``A(z)^{-1} B(z)`` at ``z = e^{jωTs}``; lines with singular A(z) are NaN."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if np.any(np.abs(omegas) > np.pi / model.sample_period * (1 + 1e-12)):
        raise InvalidSpecError("ARX frequency response is only defined below the Nyquist frequency")
    z_inv = np.exp(-1j * omegas * model.sample_period)
    a = np.broadcast_to(np.eye(2, dtype=complex), (omegas.size, 2, 2)).copy()
    for m, coeff in enumerate(model.a_coeffs, start=1):
        a += (z_inv**m)[:, None, None] * coeff
    b = np.zeros((omegas.size, 2, 2), dtype=complex)
    for m, coeff in enumerate(model.b_coeffs, start=1):
        b += (z_inv**m)[:, None, None] * coeff

    s = np.linalg.svd(a, compute_uv=False)
    valid = s[:, 1] > s[:, 0] / SINGULAR_CONDITION
    out = np.full((omegas.size, 2, 2), np.nan, dtype=complex)
    if valid.any():
        out[valid] = np.linalg.solve(a[valid], b[valid])
    return out


def arx_impedance(model: ArxModel, n: int) -> ImpedanceFrfEstimate:
    """ARX frequency response on the positive lines of an N-point grid."""
    omegas = frequency_grid(n, model.sample_period)[: n // 2]
    frf = arx_frf(model, omegas)
    valid = np.all(np.isfinite(frf), axis=(1, 2))
    return ImpedanceFrfEstimate.from_matrices(frf, n, model.sample_period, valid)
