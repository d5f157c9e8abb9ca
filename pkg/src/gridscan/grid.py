"""Synthetic dq-frame grids: ladder networks, ZOH simulation, noise and oracles.

Element values are per-unit at the base angular frequency ``ω_b = 2π f_b``:
an inductor of ``L`` p.u. has ``l = L / ω_b`` and a capacitor of ``C`` p.u.
has ``c = C / ω_b``, while frequencies stay in true rad/s. The dq frame
rotates at ``ω_g = ω_b``.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Optional, Union

import numpy as np
from pydantic import Field, StrictFloat, StrictInt
from scipy import signal
from scipy.linalg import block_diag

from .document import ConfigModel, validate_document
from .errors import ConfigError, GridConstructionError, InvalidSpecError, MissingInputError, ShapeError
from .impedance import ImpedanceFrfEstimate, impedance_to_complex_pair
from .signals import DqTimeSeries
from .spectra import Spectrum, conj_reversed, dft, frequency_grid, signed_frequency_grid

logger = logging.getLogger(__name__)

__all__ = [
    "LadderBranch",
    "LadderNetworkConfig",
    "StateSpaceGrid",
    "NoiseSpec",
    "InjectionFilter",
    "default_ladder_config",
    "load_ladder_config",
    "build_ladder_grid",
    "is_hurwitz",
    "true_frf",
    "true_impedance_frf",
    "discretize",
    "simulate",
    "simulate_with_injection",
    "transient_initial_state",
    "add_measurement_noise",
    "leakage_oracle",
]

PerUnit = Annotated[StrictFloat, Field(gt=0)]


class LadderBranch(ConfigModel):
    """Series R-L from the previous node, with optional shunt R and/or C at its far node."""

    series_r: PerUnit
    series_l_d: PerUnit
    series_l_q: Optional[PerUnit] = None
    shunt_r: Optional[PerUnit] = None
    shunt_c: Optional[PerUnit] = None

    @property
    def l_q(self) -> float:
        return self.series_l_d if self.series_l_q is None else self.series_l_q

    @property
    def has_shunt(self) -> bool:
        return self.shunt_r is not None or self.shunt_c is not None


class LadderNetworkConfig(ConfigModel):
    """Port capacitor at the PCC followed by a chain of branches ending at a stiff bus."""

    port_shunt_capacitance: PerUnit
    branches: tuple[LadderBranch, ...] = Field(min_length=1)
    base_frequency: PerUnit = 50.0

    @property
    def omega_b(self) -> float:
        return 2.0 * np.pi * self.base_frequency

    @property
    def is_symmetric(self) -> bool:
        return all(b.l_q == b.series_l_d for b in self.branches)


def default_ladder_config(asymmetric: bool = True) -> LadderNetworkConfig:
    """Two-branch ladder with two lightly damped resonances below 2 kHz.

    Branch 1 carries the line (0.015 + j0.15 p.u., saliency L_q = 0.18 when
    ``asymmetric``) and a 0.05 p.u. shunt capacitor; branch 2 ends at a
    far-end node holding the 2 p.u. load resistor and the 10 p.u. capacitor.
    """
    return LadderNetworkConfig(
        port_shunt_capacitance=0.05,
        branches=(
            LadderBranch(series_r=0.015, series_l_d=0.15, series_l_q=0.18 if asymmetric else None, shunt_c=0.05),
            LadderBranch(series_r=0.015, series_l_d=0.15, shunt_r=2.0, shunt_c=10.0),
        ),
        base_frequency=50.0,
    )


def load_ladder_config(path: Union[str, Path]) -> LadderNetworkConfig:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"Network file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON ({e})", str(path)) from e
    return validate_document(LadderNetworkConfig, data, root="grid")


@dataclass(frozen=True, eq=False)
class StateSpaceGrid:
    """Continuous-time realization ``ẋ = Ax + B i``, ``v = Cx + D i`` of Z_g(s)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    omega_g: float

    def __post_init__(self) -> None:
        for name in ("A", "B", "C", "D"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.B.shape != (n, 2) or self.C.shape != (2, n) or self.D.shape != (2, 2):
            raise ShapeError(
                f"inconsistent realization: A{self.A.shape} B{self.B.shape} C{self.C.shape} D{self.D.shape}"
            )

    @property
    def n_states(self) -> int:
        return self.A.shape[0]


def is_hurwitz(model: StateSpaceGrid) -> bool:
    return bool(np.all(np.linalg.eigvals(model.A).real < 0))


def _selector(start: int, n: int) -> np.ndarray:
    s = np.zeros((2, n))
    s[0, start] = 1.0
    s[1, start + 1] = 1.0
    return s


def _check_ladder(config: LadderNetworkConfig) -> None:
    last = len(config.branches)
    for j, branch in enumerate(config.branches, start=1):
        if j < last and not branch.has_shunt:
            raise GridConstructionError(
                f"node {j} has no shunt element; only the far-end node may be the stiff bus"
            )


def build_ladder_grid(config: LadderNetworkConfig) -> StateSpaceGrid:
    """Assemble the dq state-space model of a ladder network.

    States are ordered PCC capacitor, then per branch its inductor pair and
    (if present) its node capacitor pair, each as (d, q). A node with a shunt
    resistor only is algebraic; a far-end node without shunts is the stiff bus.

    Args:
        config: Ladder description in per-unit

    Returns:
        Model with input (i_d, i_q) injected at the PCC and output (v_d, v_q)

    Raises:
        GridConstructionError: Structurally invalid ladder or non-Hurwitz A
    """
    _check_ladder(config)
    omega_b = config.omega_b
    omega_g = omega_b
    branches = config.branches
    last = len(branches)

    cap_slot: dict[int, int] = {0: 0}
    ind_slot: dict[int, int] = {}
    n = 2
    for j, branch in enumerate(branches, start=1):
        ind_slot[j] = n
        n += 2
        if branch.shunt_c is not None:
            cap_slot[j] = n
            n += 2

    zero = np.zeros((2, n))

    def branch_current(j: int) -> np.ndarray:
        return _selector(ind_slot[j], n) if 1 <= j <= last else zero

    # node voltages as linear maps of the state
    voltage = {0: _selector(cap_slot[0], n)}
    for j, branch in enumerate(branches, start=1):
        if branch.shunt_c is not None:
            voltage[j] = _selector(cap_slot[j], n)
        elif branch.shunt_r is not None:
            voltage[j] = branch.shunt_r * (branch_current(j) - branch_current(j + 1))
        else:
            voltage[j] = zero

    A = np.zeros((n, n))
    B = np.zeros((n, 2))
    for j, branch in enumerate(branches, start=1):
        p = ind_slot[j]
        l_d = branch.series_l_d / omega_b
        l_q = branch.l_q / omega_b
        drop = voltage[j - 1] - voltage[j]
        A[p] += drop[0] / l_d
        A[p + 1] += drop[1] / l_q
        A[p, p] -= branch.series_r / l_d
        A[p + 1, p + 1] -= branch.series_r / l_q
        A[p, p + 1] += omega_g * l_q / l_d
        A[p + 1, p] -= omega_g * l_d / l_q

    capacitances = {0: config.port_shunt_capacitance}
    capacitances.update({j: b.shunt_c for j, b in enumerate(branches, start=1) if b.shunt_c is not None})
    for j, c_pu in capacitances.items():
        s = cap_slot[j]
        c = c_pu / omega_b
        net = branch_current(j) - branch_current(j + 1) if j > 0 else -branch_current(1)
        if j > 0 and branches[j - 1].shunt_r is not None:
            net = net - voltage[j] / branches[j - 1].shunt_r
        A[s : s + 2] += net / c
        A[s, s + 1] += omega_g
        A[s + 1, s] -= omega_g
        if j == 0:
            B[s : s + 2] += np.eye(2) / c

    model = StateSpaceGrid(A, B, voltage[0].copy(), np.zeros((2, 2)), omega_g)
    eigenvalues = np.linalg.eigvals(A)
    worst = eigenvalues[np.argmax(eigenvalues.real)]
    if worst.real >= 0:
        raise GridConstructionError(f"ladder grid is not Hurwitz: eigenvalue {worst:.6g} has non-negative real part")
    logger.info("Built ladder grid with %d states (slowest pole %.4g rad/s)", n, worst.real)
    return model


def true_frf(model: StateSpaceGrid, omegas) -> np.ndarray:
    """Exact ``C (jωI - A)^{-1} B + D`` at each ω, shape (K, 2, 2)."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    n = model.n_states
    pencil = 1j * omegas[:, None, None] * np.eye(n) - model.A
    rhs = np.broadcast_to(model.B.astype(complex), (omegas.size, n, 2))
    return model.C @ np.linalg.solve(pencil, rhs) + model.D


def true_impedance_frf(model: StateSpaceGrid, n: int, sample_period: float) -> ImpedanceFrfEstimate:
    """Truth on the positive DFT bins k = 0..N/2-1 used by the comparison."""
    omegas = frequency_grid(n, sample_period)[: n // 2]
    return ImpedanceFrfEstimate.from_matrices(true_frf(model, omegas), n, sample_period)


def _zoh(A: np.ndarray, B: np.ndarray, sample_period: float, oversample: int) -> tuple[np.ndarray, np.ndarray]:
    if oversample < 1:
        raise InvalidSpecError(f"oversample must be >= 1, got {oversample}")
    n, m = B.shape
    Ad_sub, Bd_sub, *_ = signal.cont2discrete(
        (A, B, np.zeros((1, n)), np.zeros((1, m))), sample_period / oversample, method="zoh"
    )
    Ad = np.eye(n)
    Bd = np.zeros((n, m))
    for _ in range(oversample):
        Bd = Ad_sub @ Bd + Bd_sub
        Ad = Ad_sub @ Ad
    return Ad, Bd


def discretize(model: StateSpaceGrid, sample_period: float, oversample: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold (Ad, Bd); ``oversample`` composes that many sub-steps."""
    return _zoh(model.A, model.B, sample_period, oversample)


def _initial_state(model: StateSpaceGrid, x0: Optional[np.ndarray]) -> np.ndarray:
    if x0 is None:
        return np.zeros(model.n_states)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.n_states,):
        raise ShapeError(f"x0 must have {model.n_states} entries, got shape {x0.shape}")
    return x0


def simulate(model: StateSpaceGrid, injected_current: DqTimeSeries, x0: Optional[np.ndarray] = None) -> DqTimeSeries:
    """PCC voltage samples for a held (ZOH) injected current."""
    ts = injected_current.sample_period
    Ad, Bd = discretize(model, ts)
    u = np.column_stack([injected_current.d, injected_current.q])
    _, y, _ = signal.dlsim((Ad, Bd, model.C, model.D, ts), u, x0=_initial_state(model, x0))
    y = np.atleast_2d(y).reshape(len(injected_current), 2)
    return DqTimeSeries(y[:, 0] + 1j * y[:, 1], ts)


class InjectionFilter(ConfigModel):
    """Analog Butterworth low-pass shaping each held reference channel into the injected current."""

    bandwidth_hz: StrictFloat = Field(default=2000.0, gt=0)
    order: StrictInt = Field(default=4, ge=1)

    def state_space(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Block-diagonal (A, B, C) acting on (d, q) independently.

        The unit-cutoff prototype is time-scaled rather than designed at the
        target cutoff, which keeps the realization well balanced.
        """
        z, p, k = signal.butter(self.order, 1.0, btype="low", analog=True, output="zpk")
        a, b, c, _ = signal.zpk2ss(z, p, k)
        wc = 2.0 * np.pi * self.bandwidth_hz
        a, b = wc * a, wc * b
        return block_diag(a, a), block_diag(b, b), block_diag(c, c)


def simulate_with_injection(
    model: StateSpaceGrid,
    reference: DqTimeSeries,
    x0: Optional[np.ndarray] = None,
    injection: Optional[InjectionFilter] = None,
) -> tuple[DqTimeSeries, DqTimeSeries]:
    """Simulate [filter; grid] from a held reference.

    Args:
        model: Grid realization
        reference: Held dq current reference (the RBS)
        x0: Initial grid state; filter states start at rest
        injection: Current shaping filter, or None to inject the held reference itself

    Returns:
        Sampled (injected current, PCC voltage)
    """
    x0 = _initial_state(model, x0)
    if injection is None:
        return reference, simulate(model, reference, x0)

    af, bf, cf = injection.state_space()
    nf, n = af.shape[0], model.n_states
    A = np.block([[af, np.zeros((nf, n))], [model.B @ cf, model.A]])
    B = np.vstack([bf, np.zeros((n, 2))])
    C = np.block([[cf, np.zeros((2, n))], [np.zeros((2, nf)), model.C]])
    ts = reference.sample_period
    Ad, Bd = _zoh(A, B, ts, 1)
    u = np.column_stack([reference.d, reference.q])
    _, y, _ = signal.dlsim((Ad, Bd, C, np.zeros((4, 2)), ts), u, x0=np.concatenate([np.zeros(nf), x0]))
    y = np.asarray(y).reshape(len(reference), 4)
    return DqTimeSeries(y[:, 0] + 1j * y[:, 1], ts), DqTimeSeries(y[:, 2] + 1j * y[:, 3], ts)


def transient_initial_state(model: StateSpaceGrid, magnitude: float, seed: int) -> np.ndarray:
    """Random state scaled so that the initial PCC voltage has norm ``magnitude``."""
    if magnitude < 0:
        raise InvalidSpecError(f"transient magnitude must be non-negative, got {magnitude}")
    if magnitude == 0:
        return np.zeros(model.n_states)
    x = np.random.default_rng(seed).standard_normal(model.n_states)
    norm = np.linalg.norm(model.C @ x)
    if norm == 0:
        raise InvalidSpecError("random initial state is unobservable at the PCC")
    return x * (magnitude / norm)


class NoiseSpec(ConfigModel):
    """Gaussian measurement noise of a given accuracy class."""

    accuracy_class: StrictFloat = Field(default=0.005, ge=0)
    reference_magnitude_v: StrictFloat = Field(default=1.0, ge=0)
    reference_magnitude_i: StrictFloat = Field(default=0.8, ge=0)
    seed: StrictInt = Field(default=7, ge=0)


_NOISE_STREAMS = {"v": 0, "i": 1}


def add_measurement_noise(series: DqTimeSeries, spec: NoiseSpec, quantity: str = "v") -> DqTimeSeries:
    """Add independent zero-mean Gaussian noise to the d and q channels.

    The standard deviation is ``accuracy_class`` times the reference magnitude
    of ``quantity`` ("v" or "i"); each quantity draws from its own stream
    derived from ``(spec.seed, stream)``.
    """
    if quantity not in _NOISE_STREAMS:
        raise InvalidSpecError(f"quantity must be 'v' or 'i', got {quantity!r}")
    if spec.accuracy_class == 0:
        return series
    reference = spec.reference_magnitude_v if quantity == "v" else spec.reference_magnitude_i
    std = spec.accuracy_class * reference
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, _NOISE_STREAMS[quantity]]))
    noise = rng.normal(0.0, std, size=(len(series), 2))
    return DqTimeSeries(series.samples + noise[:, 0] + 1j * noise[:, 1], series.sample_period)


def leakage_oracle(
    model: StateSpaceGrid,
    injected_current: DqTimeSeries,
    x0: Optional[np.ndarray] = None,
    injection: Optional[InjectionFilter] = None,
    settle_periods: int = 0,
) -> Spectrum:
    """Exact transient term ``T_k = V_k - G₊(jω_k) I_k - G₋(jω_k) I*_{(N-k)}``.

    Computed from a noise-free simulation and the exact FRF at the signed bin
    frequencies. With ``settle_periods > 0`` the input is repeated that many
    extra times and only the last N samples are analysed.
    """
    if settle_periods < 0:
        raise InvalidSpecError(f"settle_periods must be >= 0, got {settle_periods}")
    n = len(injected_current)
    ts = injected_current.sample_period
    reference = injected_current
    if settle_periods:
        reference = DqTimeSeries(np.tile(injected_current.samples, settle_periods + 1), ts)
    current, voltage = simulate_with_injection(model, reference, x0, injection)
    current = DqTimeSeries(current.samples[-n:], ts)
    voltage = DqTimeSeries(voltage.samples[-n:], ts)

    I = dft(current)
    V = dft(voltage)
    gplus, gminus = impedance_to_complex_pair(true_frf(model, signed_frequency_grid(n, ts)))
    transient = V.values - gplus * I.values - gminus * conj_reversed(I).values
    return Spectrum(transient, ts)
