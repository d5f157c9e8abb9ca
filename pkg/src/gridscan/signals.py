"""Time-domain signals: RBS excitation, Park transform, mean removal, complex packing.

A dq signal is carried as a single complex sequence ``d + j q``; the real
d and q channels are available through :func:`unpack_complex`.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, TypeVar

import numpy as np

from .errors import InvalidSpecError, ShapeError

__all__ = [
    "RealTimeSeries",
    "DqTimeSeries",
    "ExcitationSpec",
    "generate_rbs",
    "generate_dq_rbs",
    "abc_to_dq",
    "dq_to_abc",
    "remove_mean",
    "pack_complex",
    "unpack_complex",
]

_PHASE_SHIFTS = (0.0, 2.0 * np.pi / 3.0, -2.0 * np.pi / 3.0)


def _check_sampling(samples: np.ndarray, sample_period: float) -> None:
    if samples.ndim != 1:
        raise ShapeError(f"samples must be one-dimensional, got shape {samples.shape}")
    if samples.size < 1:
        raise ShapeError("a time series needs at least one sample")
    if not (sample_period > 0 and math.isfinite(sample_period)):
        raise InvalidSpecError(f"sample_period must be positive, got {sample_period}")


@dataclass(frozen=True, eq=False)
class RealTimeSeries:
    """Uniformly sampled real signal (per-unit)."""

    samples: np.ndarray
    sample_period: float
    channel_label: str = ""

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_period", float(self.sample_period))
        _check_sampling(samples, self.sample_period)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.sample_period


@dataclass(frozen=True, eq=False)
class DqTimeSeries:
    """Uniformly sampled complex dq signal, ``samples[n] = d[n] + j q[n]``."""

    samples: np.ndarray
    sample_period: float

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=complex)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_period", float(self.sample_period))
        _check_sampling(samples, self.sample_period)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def d(self) -> np.ndarray:
        return self.samples.real

    @property
    def q(self) -> np.ndarray:
        return self.samples.imag

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.sample_period


Series = TypeVar("Series", RealTimeSeries, DqTimeSeries)


@dataclass(frozen=True)
class ExcitationSpec:
    """Random binary sequence excitation on the d and q current channels.

    ``channel_seeds`` defaults to ``(seed + 1, seed + 2)`` so that the two
    channels are drawn from independent generators.
    """

    amplitude: float
    duration_samples: int
    seed: int = 1
    channel_seeds: Optional[tuple[int, int]] = None
    amplitude_limit: float = 0.05

    def __post_init__(self) -> None:
        if not self.amplitude > 0:
            raise InvalidSpecError(f"RBS amplitude must be positive, got {self.amplitude}")
        if self.amplitude > self.amplitude_limit:
            raise InvalidSpecError(
                f"RBS amplitude {self.amplitude} exceeds the configured limit {self.amplitude_limit}"
            )
        if self.duration_samples < 1:
            raise InvalidSpecError(f"duration_samples must be >= 1, got {self.duration_samples}")
        if self.seed < 0:
            raise InvalidSpecError(f"seed must be unsigned, got {self.seed}")
        seed_d, seed_q = self.resolved_channel_seeds
        if seed_d == seed_q:
            raise InvalidSpecError("d and q channels need distinct seeds")
        if seed_d < 0 or seed_q < 0:
            raise InvalidSpecError("channel seeds must be unsigned")

    @property
    def resolved_channel_seeds(self) -> tuple[int, int]:
        if self.channel_seeds is None:
            return (self.seed + 1, self.seed + 2)
        return (int(self.channel_seeds[0]), int(self.channel_seeds[1]))


def _rbs_samples(amplitude: float, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return amplitude * (2.0 * rng.integers(0, 2, size=n) - 1.0)


def generate_rbs(spec: ExcitationSpec, sample_period: float = 1e-4) -> RealTimeSeries:
    """Equiprobable ±amplitude sequence drawn from ``spec.seed``, held for one sample each."""
    samples = _rbs_samples(spec.amplitude, spec.duration_samples, spec.seed)
    return RealTimeSeries(samples, sample_period, channel_label="rbs")


def generate_dq_rbs(spec: ExcitationSpec, sample_period: float = 1e-4) -> DqTimeSeries:
    """Two independent RBS channels packed as ``d + j q`` using the channel seeds."""
    seed_d, seed_q = spec.resolved_channel_seeds
    d = _rbs_samples(spec.amplitude, spec.duration_samples, seed_d)
    q = _rbs_samples(spec.amplitude, spec.duration_samples, seed_q)
    return DqTimeSeries(d + 1j * q, sample_period)


def _check_same_grid(*series: RealTimeSeries) -> None:
    first = series[0]
    for other in series[1:]:
        if len(other) != len(first):
            raise ShapeError(f"length mismatch: {len(first)} vs {len(other)}")
        if not math.isclose(other.sample_period, first.sample_period, rel_tol=1e-12):
            raise ShapeError(
                f"sample period mismatch: {first.sample_period} vs {other.sample_period}"
            )


def _park_angle(n: int, sample_period: float, omega_g: float, theta0: float) -> np.ndarray:
    return omega_g * np.arange(n) * sample_period + theta0


def abc_to_dq(
    phase_a: RealTimeSeries,
    phase_b: RealTimeSeries,
    phase_c: RealTimeSeries,
    omega_g: float,
    theta0: float = 0.0,
) -> tuple[RealTimeSeries, RealTimeSeries]:
    """Amplitude-invariant Park transform with angle ``omega_g t_n + theta0``.

    Args:
        phase_a: Phase a samples
        phase_b: Phase b samples (lagging a by 2π/3 in a positive sequence)
        phase_c: Phase c samples
        omega_g: Frame rotation speed in rad/s
        theta0: Frame angle at t = 0

    Returns:
        The d and q channels; a balanced cosine triple aligned with the frame
        maps to d = amplitude, q = 0.
    """
    _check_same_grid(phase_a, phase_b, phase_c)
    ts = phase_a.sample_period
    theta = _park_angle(len(phase_a), ts, omega_g, theta0)
    phases = (phase_a.samples, phase_b.samples, phase_c.samples)
    d = (2.0 / 3.0) * sum(x * np.cos(theta - s) for x, s in zip(phases, _PHASE_SHIFTS))
    q = -(2.0 / 3.0) * sum(x * np.sin(theta - s) for x, s in zip(phases, _PHASE_SHIFTS))
    return RealTimeSeries(d, ts, "d"), RealTimeSeries(q, ts, "q")


def dq_to_abc(
    d: RealTimeSeries, q: RealTimeSeries, omega_g: float, theta0: float = 0.0
) -> tuple[RealTimeSeries, RealTimeSeries, RealTimeSeries]:
    """Inverse of :func:`abc_to_dq` for balanced (zero-sequence free) signals."""
    _check_same_grid(d, q)
    ts = d.sample_period
    theta = _park_angle(len(d), ts, omega_g, theta0)
    return tuple(
        RealTimeSeries(d.samples * np.cos(theta - s) - q.samples * np.sin(theta - s), ts, label)
        for s, label in zip(_PHASE_SHIFTS, ("a", "b", "c"))
    )


def remove_mean(series: Series) -> Series:
    """Subtract the sample mean."""
    return replace(series, samples=series.samples - series.samples.mean())


def pack_complex(d: RealTimeSeries, q: RealTimeSeries) -> DqTimeSeries:
    _check_same_grid(d, q)
    return DqTimeSeries(d.samples + 1j * q.samples, d.sample_period)


def unpack_complex(series: DqTimeSeries) -> tuple[RealTimeSeries, RealTimeSeries]:
    return (
        RealTimeSeries(series.samples.real.copy(), series.sample_period, "d"),
        RealTimeSeries(series.samples.imag.copy(), series.sample_period, "q"),
    )
