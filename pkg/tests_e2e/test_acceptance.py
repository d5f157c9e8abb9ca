"""Full-scale (N = 10^4, Ts = 1e-4 s) accuracy reproductions on the shipped grid."""

import numpy as np
import pytest

from gridscan.config import ArxMethod, LpmMethod, SeqPertMethod, default_experiment_config
from gridscan.experiment import run_method, simulate_dataset, without_noise
from gridscan.lpm import LpmConfig, estimate_frf
from gridscan.metrics import BandSelection, channel_scores, sigma_max_2x2
from tests.test_lpm import _interior, _rational_spectra

pytestmark = pytest.mark.slow

ORDERS = (2, 4, 6, 8, 10)
FULL_BAND = BandSelection(0.0, 4000.0)
LOW_BAND = BandSelection(0.0, 2000.0)


@pytest.fixture(scope="module")
def noise_free():
    return simulate_dataset(without_noise(default_experiment_config()))


@pytest.fixture(scope="module")
def noisy():
    return simulate_dataset(default_experiment_config())


def _scores(dataset, method, band):
    result = run_method(method, dataset.voltage, dataset.current)
    return channel_scores(result.impedance, dataset.truth, band)


def test_shipped_record_has_full_scale(noisy):
    assert noisy.n == 10_000
    assert noisy.sample_period == 1e-4
    assert not noisy.config.grid.is_symmetric
    assert np.any(noisy.x0)


@pytest.mark.parametrize("order", ORDERS)
def test_lpm_noise_free_is_near_exact(noise_free, order):
    """Without noise every order fits all four channels over 0-4 kHz despite the transient."""
    scores = _scores(noise_free, LpmMethod(order=order), FULL_BAND)

    assert min(scores.fits.values()) >= 99.5, scores.fits
    assert scores.rel_hinf <= 1e-2


def test_lpm_noisy_accuracy_and_order_robustness(noisy):
    """With 0.5 % noise: diagonal ≥ 99, off-diagonal ≥ 98, rel H∞ ≤ 0.15, < 1 point spread over orders."""
    all_scores = {order: _scores(noisy, LpmMethod(order=order), LOW_BAND) for order in ORDERS}

    for order, scores in all_scores.items():
        assert scores.fit_dd >= 99.0 and scores.fit_qq >= 99.0, (order, scores.fits)
        assert scores.fit_dq >= 98.0 and scores.fit_qd >= 98.0, (order, scores.fits)
        assert scores.rel_hinf <= 0.15, (order, scores.rel_hinf)
    for channel in ("dd", "dq", "qd", "qq"):
        values = [s.fits[channel] for s in all_scores.values()]
        assert max(values) - min(values) < 1.0, (channel, values)


def test_low_order_arx_misses_the_coupling(noisy):
    scores = _scores(noisy, ArxMethod(order=2), LOW_BAND)
    assert min(scores.fit_dq, scores.fit_qd) < 70.0, scores.fits


def test_sequential_perturbation_suffers_from_leakage(noisy):
    """Two halves of one transient record are not a pair of steady-state experiments."""
    scores = _scores(noisy, SeqPertMethod(window="hamming"), LOW_BAND)
    assert max(scores.fits.values()) < 0.0, scores.fits


def test_estimate_at_the_fundamental_bin(noise_free):
    """The RBS does not target ω_g, yet the local model still gives a finite, accurate value there."""
    result = run_method(LpmMethod(order=4), noise_free.voltage, noise_free.current)
    k = round(noise_free.config.grid.base_frequency * noise_free.n * noise_free.sample_period)
    estimate = result.impedance.as_matrices()[k]
    truth = noise_free.truth.as_matrices()
    band = np.arange(round(LOW_BAND.f_max * noise_free.n * noise_free.sample_period) + 1)

    assert result.impedance.valid[k]
    assert np.all(np.isfinite(estimate))
    assert sigma_max_2x2(estimate - truth[k]) <= 1e-2 * np.max(sigma_max_2x2(truth[band]))


def test_exact_recovery_at_n_4096():
    """Rational truth of local order ≤ R is recovered to 1e-6 on a 4096-line record."""
    n = 4096
    V, I, gplus, gminus = _rational_spectra(n, 2, seed=11)
    estimate = estimate_frf(V, I, LpmConfig.for_order(2))
    bins = _interior(n, estimate.config.half_window)

    np.testing.assert_allclose(estimate.gplus[bins], gplus[bins], rtol=1e-6)
    np.testing.assert_allclose(estimate.gminus[bins], gminus[bins], rtol=1e-6)
