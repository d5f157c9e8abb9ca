"""Tests for the comparison estimators."""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gridscan.baselines import (
    ArxModel,
    arx_fit,
    arx_frf,
    arx_impedance,
    arx_prediction_errors,
    etfe,
    etfe_impedance,
    sequential_perturbation_estimate,
    split_record,
)
from gridscan.errors import InvalidSpecError, RankDeficiencyError, ShapeError
from gridscan.grid import build_ladder_grid, default_ladder_config, discretize, simulate
from gridscan.lpm import LpmConfig, estimate_frf
from gridscan.metrics import fit_percent
from gridscan.signals import DqTimeSeries, ExcitationSpec, RealTimeSeries, generate_dq_rbs
from gridscan.spectra import Spectrum, dft

TS = 1e-4


def _random_spectrum(n, seed):
    rng = np.random.default_rng(seed)
    return Spectrum(rng.standard_normal(n) + 1j * rng.standard_normal(n), TS)


def _static_experiment(z, n, seed):
    """(v, i) records of a memoryless real 2×2 map v = Z i."""
    rng = np.random.default_rng(seed)
    i = rng.choice([-0.05, 0.05], (n, 2))
    v = i @ z.T
    return DqTimeSeries(v[:, 0] + 1j * v[:, 1], TS), DqTimeSeries(i[:, 0] + 1j * i[:, 1], TS)


def test_etfe_is_the_line_ratio():
    I = _random_spectrum(64, 0)
    V = Spectrum((2 + 1j) * I.values, TS)
    estimate = etfe(V, I)

    assert np.all(estimate.valid)
    assert_allclose(estimate.values, 2 + 1j, rtol=1e-12)


def test_etfe_flags_unexcited_lines():
    """Lines with |I_k| below the floor are NaN and invalid."""
    values = np.ones(16, dtype=complex)
    values[3] = 0.0
    I = Spectrum(values, TS)
    estimate = etfe(Spectrum(values * 3, TS), I)

    assert estimate.valid.tolist().count(False) == 1
    assert not estimate.valid[3]
    assert np.isnan(estimate.values[3])


def test_etfe_impedance_assumes_symmetry():
    """A constant complex TF g maps to Z_dd = Z_qq = Re g and Z_qd = -Z_dq = Im g."""
    I = _random_spectrum(32, 1)
    frf = etfe_impedance(Spectrum((2 + 1j) * I.values, TS), I)

    assert len(frf) == 16
    assert_allclose(frf.as_matrices(), np.broadcast_to([[2, -1], [1, 2]], (16, 2, 2)), atol=1e-12)


def test_etfe_length_mismatch():
    with pytest.raises(ShapeError):
        etfe(_random_spectrum(8, 0), _random_spectrum(10, 1))


def test_split_record_halves_and_drops_odd_sample():
    v = DqTimeSeries(np.arange(11, dtype=complex), TS)
    i = DqTimeSeries(np.arange(11, dtype=complex) * 1j, TS)
    (v1, i1), (v2, i2) = split_record(v, i)

    assert len(v1) == len(v2) == len(i1) == len(i2) == 5
    assert v2.samples[0] == 5
    assert v2.samples[-1] == 9
    with pytest.raises(ShapeError, match="too short"):
        split_record(DqTimeSeries(np.ones(3), TS), DqTimeSeries(np.ones(3), TS))


def test_sequential_perturbation_recovers_static_matrix():
    """Two independent experiments on v = Z i give Z at every line, with either window."""
    z = np.array([[0.3, -0.2], [0.25, 0.4]])
    exp1 = _static_experiment(z, 200, seed=1)
    exp2 = _static_experiment(z, 200, seed=2)

    for window in ("rectangular", "hamming"):
        frf = sequential_perturbation_estimate(exp1, exp2, window)
        assert frf.n == 200
        assert len(frf) == 100
        valid = frf.valid
        assert valid.sum() > 90
        assert_allclose(frf.as_matrices()[valid], np.broadcast_to(z, (valid.sum(), 2, 2)), atol=1e-9)


def test_sequential_perturbation_flags_dependent_experiments():
    """Repeating the same experiment leaves the current matrix singular at every line."""
    z = np.eye(2)
    exp = _static_experiment(z, 64, seed=3)
    frf = sequential_perturbation_estimate(exp, exp)

    assert not frf.valid.any()
    assert np.all(np.isnan(frf.as_matrices()))


def test_sequential_perturbation_rejects_mismatched_experiments():
    exp1 = _static_experiment(np.eye(2), 64, seed=1)
    exp2 = _static_experiment(np.eye(2), 32, seed=2)
    with pytest.raises(ShapeError):
        sequential_perturbation_estimate(exp1, exp2)


def _reference_arx():
    a = np.array([[[-0.5, 0.05], [0.0, -0.5]], 0.06 * np.eye(2)])
    b = np.array([[[0.2, 0.1], [-0.05, 0.3]], [[0.05, 0.0], [0.02, -0.1]]])
    return ArxModel(a, b, TS)


def test_reference_model_is_stable():
    model = _reference_arx()
    assert model.na == 2 and model.nb == 2
    assert model.companion().shape == (4, 4)
    assert model.is_stable()
    assert not ArxModel(np.array([-1.5 * np.eye(2)]), np.zeros((1, 2, 2)), TS).is_stable()


def test_arx_fit_recovers_noise_free_model():
    model = _reference_arx()
    u = np.random.default_rng(4).choice([-1.0, 1.0], (2000, 2))
    y = model.simulate(u)

    fitted = arx_fit(u, y, 2, 2, TS)

    assert_allclose(fitted.a_coeffs, model.a_coeffs, atol=1e-8)
    assert_allclose(fitted.b_coeffs, model.b_coeffs, atol=1e-8)


def test_arx_fit_accepts_channel_series():
    """u and y may be given as (d, q) RealTimeSeries pairs; Ts is taken from u."""
    model = _reference_arx()
    u = np.random.default_rng(5).choice([-1.0, 1.0], (500, 2))
    y = model.simulate(u)
    ts = 2e-4
    pair = lambda x: (RealTimeSeries(x[:, 0], ts), RealTimeSeries(x[:, 1], ts))  # noqa: E731

    fitted = arx_fit(pair(u), pair(y), 2, 2)

    assert fitted.sample_period == ts
    assert_allclose(fitted.a_coeffs, model.a_coeffs, atol=1e-8)


def test_prediction_errors_return_equation_noise():
    """For the true model the one-step residuals are the equation noise."""
    model = _reference_arx()
    rng = np.random.default_rng(6)
    u = rng.choice([-1.0, 1.0], (300, 2))
    e = 0.01 * rng.standard_normal((300, 2))
    y = model.simulate(u, noise=e)

    assert_allclose(arx_prediction_errors(model, u, y), e[2:], atol=1e-12)


def test_arx_fit_rank_deficient_regressors():
    """Identical input channels cannot be separated."""
    rng = np.random.default_rng(7)
    d = rng.choice([-1.0, 1.0], 200)
    u = np.column_stack([d, d])
    y = rng.standard_normal((200, 2))
    with pytest.raises(RankDeficiencyError):
        arx_fit(u, y, 1, 1)


def test_arx_fit_argument_checks():
    u = np.zeros((100, 2))
    with pytest.raises(ShapeError):
        arx_fit(u, np.zeros((99, 2)), 1, 1)
    with pytest.raises(ShapeError, match="too few"):
        arx_fit(np.zeros((12, 2)), np.zeros((12, 2)), 2, 2)
    with pytest.raises(InvalidSpecError):
        arx_fit(u, u, -1, 1)


def test_arx_fit_warns_about_unstable_model(caplog):
    unstable = ArxModel(np.array([-1.02 * np.eye(2)]), np.array([np.eye(2)]), TS)
    u = np.random.default_rng(8).choice([-1.0, 1.0], (200, 2))
    y = unstable.simulate(u)
    with caplog.at_level(logging.WARNING, logger="gridscan"):
        fitted = arx_fit(u, y, 1, 1, TS)
    assert not fitted.is_stable()
    assert "unstable" in caplog.text


def test_arx_frf_matches_direct_evaluation():
    model = _reference_arx()
    omega = 2 * np.pi * 700.0
    z_inv = np.exp(-1j * omega * TS)
    a = np.eye(2) + model.a_coeffs[0] * z_inv + model.a_coeffs[1] * z_inv**2
    b = model.b_coeffs[0] * z_inv + model.b_coeffs[1] * z_inv**2

    assert_allclose(arx_frf(model, [omega])[0], np.linalg.solve(a, b), rtol=1e-12)
    with pytest.raises(InvalidSpecError, match="Nyquist"):
        arx_frf(model, [2 * np.pi * 6000.0])


def test_arx_impedance_grid():
    frf = arx_impedance(_reference_arx(), 100)
    assert len(frf) == 50
    assert frf.n == 100
    assert np.all(frf.valid)


def test_arx_fit_zero_output_gives_zero_model(caplog):
    """With y ≡ 0 only the input columns are active and every coefficient is zero."""
    u = np.random.default_rng(9).choice([-1.0, 1.0], (300, 2))
    with caplog.at_level(logging.WARNING, logger="gridscan"):
        fitted = arx_fit(u, np.zeros((300, 2)), 2, 2, TS)

    assert_allclose(fitted.a_coeffs, 0.0, atol=1e-15)
    assert_allclose(fitted.b_coeffs, 0.0, atol=1e-15)
    assert fitted.is_stable()
    assert "unstable" not in caplog.text


def test_arx_residual_variance_matches_white_equation_noise():
    """Under white-noise input the fitted residuals carry the equation-noise variance and no more."""
    model = _reference_arx()
    rng = np.random.default_rng(10)
    sigma = 0.01
    u = rng.standard_normal((20_000, 2))
    e = sigma * rng.standard_normal((20_000, 2))
    y = model.simulate(u, noise=e)

    residuals = arx_prediction_errors(arx_fit(u, y, 2, 2, TS), u, y)

    assert_allclose(residuals.var(axis=0), sigma**2, rtol=0.05)
    assert np.sum(residuals**2) <= np.sum(e[2:] ** 2) * (1 + 1e-9)


def _periodic_voltage(model, current):
    """Steady-state response of the sampled grid to ``current`` repeated forever."""
    Ad, Bd = discretize(model, TS)
    u = np.column_stack([current.d, current.q])
    x_end = np.zeros(Ad.shape[0])
    for row in u:
        x_end = Ad @ x_end + Bd @ row
    x0 = np.linalg.solve(np.eye(Ad.shape[0]) - np.linalg.matrix_power(Ad, len(u)), x_end)
    return simulate(model, current, x0)


def _sampled_frf(model, n, bins):
    """``C (zI - Ad)^{-1} Bd + D`` at z = exp(j2πk/N)."""
    Ad, Bd = discretize(model, TS)
    z = np.exp(2j * np.pi * np.asarray(bins) / n)
    pencil = z[:, None, None] * np.eye(Ad.shape[0]) - Ad
    return model.C @ np.linalg.solve(pencil, np.broadcast_to(Bd, (z.size, *Bd.shape))) + model.D


def test_sequential_perturbation_is_exact_on_periodic_grid_records():
    """Steady-state records of the sampled ladder give its discrete-time FRF at every line."""
    model = build_ladder_grid(default_ladder_config())
    n = 1024
    experiments = []
    for seed in (1, 10):
        current = generate_dq_rbs(ExcitationSpec(amplitude=0.05, duration_samples=n, seed=seed), TS)
        experiments.append((_periodic_voltage(model, current), current))

    frf = sequential_perturbation_estimate(*experiments, window="rectangular")
    expected = _sampled_frf(model, n, np.arange(n // 2))

    assert frf.valid.all()
    assert_allclose(frf.as_matrices(), expected, rtol=0, atol=1e-6 * np.max(np.abs(expected)))


def test_etfe_and_lpm_agree_on_periodic_symmetric_records():
    """Without leakage and with G₋ ≡ 0 the line ratio is exact and the local model reproduces it."""
    model = build_ladder_grid(default_ladder_config(asymmetric=False))
    n = 10_000
    current = generate_dq_rbs(ExcitationSpec(amplitude=0.05, duration_samples=n, seed=4), TS)
    V, I = dft(_periodic_voltage(model, current)), dft(current)
    band = np.arange(1, 2001)

    ratio = etfe(V, I)
    sampled = _sampled_frf(model, n, band)
    assert_allclose(ratio.values[band], sampled[:, 0, 0] + 1j * sampled[:, 1, 0], rtol=1e-6)

    local = estimate_frf(V, I, LpmConfig.for_order(4, assume_symmetric=True, assume_periodic=True))
    assert local.valid[band].all()
    assert fit_percent(local.gplus[band], ratio.values[band]) > 99.0
