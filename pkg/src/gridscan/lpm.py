"""Local parametric estimation of the complex transfer-function pair (G₊, G₋).

Around every DFT line k the spectra are fitted, over the window of lines
k-ℓ..k+ℓ (circular), to the local rational model

    A_k(r) V_{k+r} = B⁺_k(r) I_{k+r} + B⁻_k(r) I*_{(N-k-r) mod N} + C_k(r)

with polynomials of degree R in the integer offset r and ``a_0 = 1``. The
estimates are the constant terms: Ĝ₊(jω_k) = b⁺_0, Ĝ₋(jω_k) = b⁻_0, and
c_0 tracks the transient (leakage) term. Each line is an independent
least-squares problem solved with a column-scaled truncated SVD.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidSpecError, ShapeError, UnderdeterminedError
from .signals import DqTimeSeries, remove_mean
from .spectra import Spectrum, dft, frequency_grid

logger = logging.getLogger(__name__)

__all__ = [
    "LpmConfig",
    "LocalSolution",
    "ComplexTfEstimate",
    "unknown_count",
    "local_window_indices",
    "build_local_system",
    "solve_scaled_pinv",
    "estimate_frf",
    "estimate_complex_tf",
]


def unknown_count(order: int, assume_symmetric: bool, assume_periodic: bool) -> int:
    """4R+3 unknowns, minus R+1 per dropped polynomial block."""
    return order + (order + 1) * (1 + (not assume_symmetric) + (not assume_periodic))


@dataclass(frozen=True)
class LpmConfig:
    """Local model degree, window radius and structural assumptions.

    Attributes:
        order: Degree R of all four local polynomials
        half_window: Radius ℓ in spectral lines (window of 2ℓ+1 lines)
        assume_symmetric: Drop the B⁻ block (dq-symmetric grid, G₋ ≡ 0)
        assume_periodic: Drop the C block (steady-state periodic data)
        rank_rel_tol: Singular values below this fraction of the largest are truncated
    """

    order: int
    half_window: int
    assume_symmetric: bool = False
    assume_periodic: bool = False
    rank_rel_tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.order < 0:
            raise InvalidSpecError(f"local model order must be >= 0, got {self.order}")
        if self.half_window < 0:
            raise InvalidSpecError(f"half window must be >= 0, got {self.half_window}")
        if not 0 < self.rank_rel_tol < 1:
            raise InvalidSpecError(f"rank_rel_tol must lie in (0, 1), got {self.rank_rel_tol}")
        if self.window_length < self.unknown_count:
            raise UnderdeterminedError(
                f"window of {self.window_length} lines cannot determine {self.unknown_count} unknowns "
                f"(R={self.order}); need half_window >= {self.unknown_count // 2}"
            )

    @classmethod
    def for_order(cls, order: int, half_window: Optional[int] = None, **flags) -> "LpmConfig":
        """Config with the default radius ℓ = 4R+2 unless given."""
        return cls(order, 4 * order + 2 if half_window is None else half_window, **flags)

    @property
    def unknown_count(self) -> int:
        return unknown_count(self.order, self.assume_symmetric, self.assume_periodic)

    @property
    def excitation_count(self) -> int:
        """Columns multiplying the input spectra: the B⁺ block and, unless symmetric, the B⁻ block."""
        return (self.order + 1) * (1 + (not self.assume_symmetric))

    @property
    def window_length(self) -> int:
        return 2 * self.half_window + 1

    @property
    def label(self) -> str:
        suffix = "".join(
            tag for tag, on in (("_sym", self.assume_symmetric), ("_per", self.assume_periodic)) if on
        )
        return f"lpm_R{self.order}_l{self.half_window}{suffix}"

    def to_dict(self) -> dict:
        return {
            "R": self.order,
            "l": self.half_window,
            "symmetric": self.assume_symmetric,
            "periodic": self.assume_periodic,
            "rank_rel_tol": self.rank_rel_tol,
        }


@dataclass(frozen=True, eq=False)
class LocalSolution:
    """Solution of one local problem; θ layout is [a_1..a_R | b⁺ | b⁻ | c] minus dropped blocks."""

    theta: np.ndarray
    residual_norm: float
    condition_number: float
    effective_rank: int


@dataclass(frozen=True, eq=False)
class ComplexTfEstimate:
    """Non-parametric Ĝ₊, Ĝ₋ and transient over all N lines, with per-line diagnostics.

    A line is valid when its input columns (the B⁺ and B⁻ blocks) have full
    rank. A drop in ``effective_rank`` alone only means the local model is
    over-parameterized, which leaves the constant terms b⁺_0, b⁻_0 and c_0
    unchanged. Without ``excitation_rank`` validity falls back to full
    overall rank.
    """

    gplus: np.ndarray
    gminus: np.ndarray
    transient: np.ndarray
    residual_norm: np.ndarray
    condition_number: np.ndarray
    effective_rank: np.ndarray
    sample_period: float
    config: LpmConfig
    valid: np.ndarray = field(default=None)
    excitation_rank: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.valid is not None:
            return
        if self.excitation_rank is None:
            valid = self.effective_rank == self.config.unknown_count
        else:
            valid = self.excitation_rank == self.config.excitation_count
        object.__setattr__(self, "valid", np.asarray(valid, dtype=bool))

    @property
    def n(self) -> int:
        return self.gplus.size

    @property
    def unknown_count(self) -> int:
        return self.config.unknown_count

    @property
    def omegas(self) -> np.ndarray:
        return frequency_grid(self.n, self.sample_period)


def local_window_indices(k: int, half_window: int, n: int) -> np.ndarray:
    """Lines ``(k + r) mod N`` for r = -ℓ..ℓ."""
    if not 0 <= k < n:
        raise ShapeError(f"bin {k} outside 0..{n - 1}")
    if 2 * half_window + 1 > n:
        raise UnderdeterminedError(f"window of {2 * half_window + 1} lines exceeds the {n}-line spectrum")
    return (k + np.arange(-half_window, half_window + 1)) % n


def _check_spectra(V: Spectrum, I: Spectrum, config: LpmConfig) -> None:
    if V.n != I.n:
        raise ShapeError(f"V and I lengths differ: {V.n} vs {I.n}")
    if not np.isclose(V.sample_period, I.sample_period, rtol=1e-12, atol=0.0):
        raise ShapeError("V and I have different sample periods")
    if config.window_length > V.n:
        raise UnderdeterminedError(f"window of {config.window_length} lines exceeds the {V.n}-line spectrum")


def _build_batch(V: np.ndarray, I: np.ndarray, bins: np.ndarray, config: LpmConfig) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (Y, Φ) for several lines: shapes (b, 2ℓ+1) and (b, 2ℓ+1, p)."""
    n = V.size
    offsets = np.arange(-config.half_window, config.half_window + 1)
    idx = (bins[:, None] + offsets[None, :]) % n
    powers = offsets.astype(float)[:, None] ** np.arange(config.order + 1)[None, :]

    v_win = V[idx]
    blocks = [
        v_win[:, :, None] * powers[None, :, 1:],
        I[idx][:, :, None] * powers[None, :, :],
    ]
    if not config.assume_symmetric:
        blocks.append(np.conj(I[(-idx) % n])[:, :, None] * powers[None, :, :])
    if not config.assume_periodic:
        blocks.append(np.broadcast_to(powers.astype(complex), (bins.size,) + powers.shape))
    return v_win, np.concatenate(blocks, axis=2)


def build_local_system(V: Spectrum, I: Spectrum, k: int, config: LpmConfig) -> tuple[np.ndarray, np.ndarray]:
    """Regression vector Y_k and matrix Φ_k for line k.

    Row r of Φ_k is ``[V_{k+r} r..r^R | I_{k+r} 1..r^R | I*_{(N-k-r)} 1..r^R | 1..r^R]``,
    with the last two blocks dropped under the symmetric / periodic assumptions.
    """
    _check_spectra(V, I, config)
    local_window_indices(k, config.half_window, V.n)
    Y, Phi = _build_batch(V.values, I.values, np.array([k]), config)
    return Y[0], Phi[0]


def _scaled_pinv_batch(
    Phi: np.ndarray, Y: np.ndarray, rank_rel_tol: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Column-scaled truncated-SVD solves of a stack of problems.

    Returns:
        (theta (b, p), residual norm (b,), condition number (b,), effective rank (b,))
    """
    norms = np.linalg.norm(Phi, axis=1)
    scale = np.where(norms > 0, norms, 1.0)
    U, s, Vh = np.linalg.svd(Phi / scale[:, None, :], full_matrices=False)

    s_max = s[:, :1]
    keep = s > rank_rel_tol * s_max
    s_inv = np.divide(1.0, s, out=np.zeros_like(s), where=keep)
    coeffs = np.einsum("bmp,bm->bp", U.conj(), Y)
    theta = np.einsum("bpq,bp->bq", Vh.conj(), s_inv * coeffs) / scale

    residual = np.linalg.norm(Y - np.einsum("bmp,bp->bm", Phi, theta), axis=1)
    rank = keep.sum(axis=1)
    s_min = np.where(keep, s, np.inf).min(axis=1)
    condition = np.divide(s_max[:, 0], s_min, out=np.full(s_min.shape, np.inf), where=rank > 0)
    return theta, residual, condition, rank


def _column_rank_batch(Phi: np.ndarray, columns: slice, rank_rel_tol: float) -> np.ndarray:
    """Numerical rank of a column block of each problem, with the same scaling and cut-off."""
    block = Phi[:, :, columns]
    norms = np.linalg.norm(block, axis=1)
    s = np.linalg.svd(block / np.where(norms > 0, norms, 1.0)[:, None, :], compute_uv=False)
    return (s > rank_rel_tol * s[:, :1]).sum(axis=1)


def solve_scaled_pinv(Phi: np.ndarray, Y: np.ndarray, rank_rel_tol: float = 1e-10) -> LocalSolution:
    """Least-squares θ = Φ†Y with unit-norm column scaling and SVD truncation.

    Args:
        Phi: Regression matrix, rows >= columns
        Y: Right-hand side
        rank_rel_tol: Relative singular value cut-off

    Returns:
        LocalSolution with θ in the original (unscaled) coordinates
    """
    Phi = np.asarray(Phi, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    if Phi.ndim != 2 or Y.shape != (Phi.shape[0],):
        raise ShapeError(f"incompatible shapes Phi{Phi.shape} and Y{Y.shape}")
    if Phi.shape[0] < Phi.shape[1]:
        raise UnderdeterminedError(f"{Phi.shape[0]} equations for {Phi.shape[1]} unknowns")
    theta, residual, condition, rank = _scaled_pinv_batch(Phi[None], Y[None], rank_rel_tol)
    return LocalSolution(theta[0], float(residual[0]), float(condition[0]), int(rank[0]))


def estimate_frf(
    V: Spectrum,
    I: Spectrum,
    config: LpmConfig,
    workers: int = 1,
    chunk_size: int = 256,
) -> ComplexTfEstimate:
    """Sweep all N lines and collect b⁺_0, b⁻_0, c_0 with diagnostics.

    Lines are solved in fixed chunks of ``chunk_size``; with ``workers > 1``
    the chunks run on a thread pool. Chunk boundaries do not depend on
    ``workers``, so the result is identical for any worker count.
    Lines whose input columns lose rank are flagged in ``valid``, never raised.
    """
    _check_spectra(V, I, config)
    if workers < 1:
        raise InvalidSpecError(f"workers must be >= 1, got {workers}")
    if chunk_size < 1:
        raise InvalidSpecError(f"chunk_size must be >= 1, got {chunk_size}")

    n = V.n
    R = config.order
    bplus_col = R
    bminus_col = R + (R + 1) if not config.assume_symmetric else None
    c_col = R + (R + 1) * (1 + (not config.assume_symmetric)) if not config.assume_periodic else None
    input_cols = slice(R, R + config.excitation_count)

    gplus = np.zeros(n, dtype=complex)
    gminus = np.zeros(n, dtype=complex)
    transient = np.zeros(n, dtype=complex)
    residual = np.zeros(n)
    condition = np.zeros(n)
    rank = np.zeros(n, dtype=int)
    excitation_rank = np.zeros(n, dtype=int)

    def solve_chunk(start: int) -> None:
        bins = np.arange(start, min(start + chunk_size, n))
        Y, Phi = _build_batch(V.values, I.values, bins, config)
        theta, res, cond, rk = _scaled_pinv_batch(Phi, Y, config.rank_rel_tol)
        gplus[bins] = theta[:, bplus_col]
        if bminus_col is not None:
            gminus[bins] = theta[:, bminus_col]
        if c_col is not None:
            transient[bins] = theta[:, c_col]
        residual[bins] = res
        condition[bins] = cond
        rank[bins] = rk
        excitation_rank[bins] = _column_rank_batch(Phi, input_cols, config.rank_rel_tol)
        logger.debug("Solved lines %d..%d", bins[0], bins[-1])

    starts = range(0, n, chunk_size)
    if workers == 1:
        for start in starts:
            solve_chunk(start)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(solve_chunk, starts))

    estimate = ComplexTfEstimate(
        gplus, gminus, transient, residual, condition, rank, V.sample_period, config, excitation_rank=excitation_rank
    )
    flagged = int(np.count_nonzero(~estimate.valid))
    if flagged:
        logger.warning("%s: %d of %d lines lack excitation", config.label, flagged, n)
    reduced = int(np.count_nonzero(rank < config.unknown_count))
    if reduced:
        logger.debug("%s: %d lines have a rank-reduced local model", config.label, reduced)
    logger.info("%s: estimated %d lines with %d unknowns each", config.label, n, config.unknown_count)
    return estimate


def estimate_complex_tf(
    v: DqTimeSeries, i: DqTimeSeries, config: LpmConfig, workers: int = 1
) -> ComplexTfEstimate:
    """Mean removal, DFT and :func:`estimate_frf` from time-domain records."""
    if len(v) != len(i):
        raise ShapeError(f"v and i lengths differ: {len(v)} vs {len(i)}")
    return estimate_frf(dft(remove_mean(v)), dft(remove_mean(i)), config, workers=workers)
