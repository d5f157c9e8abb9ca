"""Maps between the complex transfer-function pair (G₊, G₋) and the 2×2 dq impedance.

``v = G₊ i + G₋ i*`` for complex dq signals is equivalent to the real
2×2 map with entries Z_dd, Z_dq, Z_qd, Z_qq.
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import ShapeError

if TYPE_CHECKING:
    from .lpm import ComplexTfEstimate

__all__ = [
    "ImpedanceFrfEstimate",
    "impedance_to_complex_pair",
    "complex_pair_to_matrix",
    "complex_pair_to_impedance",
    "symmetric_complex_to_impedance",
]

CHANNELS = ("dd", "dq", "qd", "qq")


@dataclass(frozen=True, eq=False)
class ImpedanceFrfEstimate:
    """Impedance FRF on bins k = 0..len-1 of an N-point grid (ω_k = 2πk/(N Ts)).

    Bins flagged invalid carry NaN in every channel.
    """

    z_dd: np.ndarray
    z_dq: np.ndarray
    z_qd: np.ndarray
    z_qq: np.ndarray
    n: int
    sample_period: float
    valid: Optional[np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        arrays = [np.array(getattr(self, f"z_{c}"), dtype=complex) for c in CHANNELS]
        length = arrays[0].shape
        if any(a.shape != length or a.ndim != 1 for a in arrays):
            raise ShapeError("impedance channels must be vectors of equal length")
        valid = np.ones(length, dtype=bool) if self.valid is None else np.array(self.valid, dtype=bool)
        if valid.shape != length:
            raise ShapeError("valid mask length does not match the channels")
        for c, a in zip(CHANNELS, arrays):
            a[~valid] = np.nan
            object.__setattr__(self, f"z_{c}", a)
        object.__setattr__(self, "valid", valid)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "sample_period", float(self.sample_period))

    def __len__(self) -> int:
        return self.z_dd.size

    @classmethod
    def from_matrices(
        cls, frf: np.ndarray, n: int, sample_period: float, valid: Optional[np.ndarray] = None
    ) -> "ImpedanceFrfEstimate":
        frf = np.asarray(frf)
        return cls(frf[:, 0, 0], frf[:, 0, 1], frf[:, 1, 0], frf[:, 1, 1], n, sample_period, valid)

    def as_matrices(self) -> np.ndarray:
        out = np.empty((len(self), 2, 2), dtype=complex)
        out[:, 0, 0] = self.z_dd
        out[:, 0, 1] = self.z_dq
        out[:, 1, 0] = self.z_qd
        out[:, 1, 1] = self.z_qq
        return out

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise KeyError(f"unknown channel {name!r}")
        return getattr(self, f"z_{name}")

    @property
    def frequencies_hz(self) -> np.ndarray:
        return np.arange(len(self)) / (self.n * self.sample_period)

    @property
    def omegas(self) -> np.ndarray:
        return 2.0 * np.pi * self.frequencies_hz


def impedance_to_complex_pair(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``G₊ = ½(Z_dd + Z_qq + j(Z_qd - Z_dq))``, ``G₋ = ½(Z_dd - Z_qq + j(Z_dq + Z_qd))``.

    Works on a single 2×2 matrix or any stack of shape (..., 2, 2).
    """
    z = np.asarray(z, dtype=complex)
    z_dd, z_dq, z_qd, z_qq = z[..., 0, 0], z[..., 0, 1], z[..., 1, 0], z[..., 1, 1]
    gplus = 0.5 * (z_dd + z_qq + 1j * (z_qd - z_dq))
    gminus = 0.5 * (z_dd - z_qq + 1j * (z_dq + z_qd))
    return gplus, gminus


def complex_pair_to_matrix(
    gplus: np.ndarray, gminus: np.ndarray, gplus_mirror: np.ndarray, gminus_mirror: np.ndarray
) -> np.ndarray:
    """Rebuild Z(jω) from G± at +ω and at the mirrored frequency -ω.

    Args:
        gplus: G₊(jω)
        gminus: G₋(jω)
        gplus_mirror: G₊(-jω)
        gminus_mirror: G₋(-jω)

    Returns:
        Array of shape (..., 2, 2)
    """
    gp, gm = np.asarray(gplus, dtype=complex), np.asarray(gminus, dtype=complex)
    gp_bar = np.conj(np.asarray(gplus_mirror, dtype=complex))
    gm_bar = np.conj(np.asarray(gminus_mirror, dtype=complex))
    z = np.empty(np.broadcast(gp, gm, gp_bar, gm_bar).shape + (2, 2), dtype=complex)
    z[..., 0, 0] = 0.5 * (gp + gp_bar + gm + gm_bar)
    z[..., 1, 1] = 0.5 * (gp + gp_bar - gm - gm_bar)
    z[..., 0, 1] = (-1.0 / 2j) * (gp - gp_bar - gm + gm_bar)
    z[..., 1, 0] = (1.0 / 2j) * (gp - gp_bar + gm - gm_bar)
    return z


def _positive_bins(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n % 2:
        raise ShapeError(f"impedance extraction needs an even N, got {n}")
    k = np.arange(n // 2)
    return k, (-k) % n


def complex_pair_to_impedance(est: "ComplexTfEstimate") -> ImpedanceFrfEstimate:
    """Four real impedance FRFs on k = 0..N/2-1, reading the mirror bin (N-k) mod N."""
    k, mirror = _positive_bins(est.n)
    z = complex_pair_to_matrix(est.gplus[k], est.gminus[k], est.gplus[mirror], est.gminus[mirror])
    valid = est.valid[k] & est.valid[mirror]
    return ImpedanceFrfEstimate.from_matrices(z, est.n, est.sample_period, valid)


def symmetric_complex_to_impedance(
    g: np.ndarray, sample_period: float, valid: Optional[np.ndarray] = None
) -> ImpedanceFrfEstimate:
    """Symmetric-grid extraction from a single complex TF (G₋ ≡ 0).

    ``Z_dd = Z_qq = ½(G(jω_k) + G(jω̄_k)*)`` and ``Z_qd = -Z_dq = (1/2j)(G(jω_k) - G(jω̄_k)*)``.
    """
    g = np.asarray(g, dtype=complex)
    k, mirror = _positive_bins(g.size)
    g_bar = np.conj(g[mirror])
    z_dd = 0.5 * (g[k] + g_bar)
    z_qd = (1.0 / 2j) * (g[k] - g_bar)
    if valid is not None:
        valid = np.asarray(valid, dtype=bool)
        valid = valid[k] & valid[mirror]
    return ImpedanceFrfEstimate(z_dd, -z_qd, z_qd, z_dd.copy(), g.size, sample_period, valid)
