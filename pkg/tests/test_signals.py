"""Tests for time-domain signals."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gridscan.errors import InvalidSpecError, ShapeError
from gridscan.signals import (
    DqTimeSeries,
    ExcitationSpec,
    RealTimeSeries,
    abc_to_dq,
    dq_to_abc,
    generate_dq_rbs,
    generate_rbs,
    pack_complex,
    remove_mean,
    unpack_complex,
)

OMEGA_G = 2 * np.pi * 50
TS = 1e-4


def _balanced_cosines(n, amplitude=1.0, phase=0.0):
    theta = OMEGA_G * np.arange(n) * TS + phase
    return tuple(
        RealTimeSeries(amplitude * np.cos(theta - shift), TS)
        for shift in (0.0, 2 * np.pi / 3, -2 * np.pi / 3)
    )


def test_rbs_takes_only_two_levels():
    """RBS samples are exactly ±amplitude."""
    spec = ExcitationSpec(amplitude=0.05, duration_samples=10_000, seed=1)
    rbs = generate_rbs(spec)

    assert len(rbs) == 10_000
    assert set(np.unique(rbs.samples)) <= {-0.05, 0.05}


def test_rbs_is_roughly_balanced():
    """Mean of a long RBS is close to zero."""
    rbs = generate_rbs(ExcitationSpec(amplitude=0.05, duration_samples=10_000, seed=1))
    assert abs(rbs.samples.mean()) < 0.05 * 0.05


def test_rbs_is_deterministic_per_seed():
    """Same seed gives the same sequence, a different seed does not."""
    a = generate_rbs(ExcitationSpec(0.05, 1000, seed=4))
    b = generate_rbs(ExcitationSpec(0.05, 1000, seed=4))
    c = generate_rbs(ExcitationSpec(0.05, 1000, seed=5))

    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_single_sample_rbs():
    """A one-sample RBS is a single ±amplitude value."""
    rbs = generate_rbs(ExcitationSpec(0.01, 1, seed=0))
    assert len(rbs) == 1
    assert abs(rbs.samples[0]) == pytest.approx(0.01)


def test_dq_rbs_uses_independent_channel_seeds():
    """The d and q channels follow the default channel seeds seed+1 and seed+2."""
    spec = ExcitationSpec(0.05, 2000, seed=1)
    dq = generate_dq_rbs(spec)

    assert np.array_equal(dq.d, generate_rbs(ExcitationSpec(0.05, 2000, seed=2)).samples)
    assert np.array_equal(dq.q, generate_rbs(ExcitationSpec(0.05, 2000, seed=3)).samples)
    assert not np.array_equal(dq.d, dq.q)


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"amplitude": 0.0, "duration_samples": 10}, "positive"),
        ({"amplitude": 0.06, "duration_samples": 10}, "exceeds"),
        ({"amplitude": 0.05, "duration_samples": 0}, "duration_samples"),
        ({"amplitude": 0.05, "duration_samples": 10, "channel_seeds": (3, 3)}, "distinct"),
        ({"amplitude": 0.05, "duration_samples": 10, "seed": -1}, "unsigned"),
    ],
)
def test_invalid_excitation_spec(kwargs, match):
    """Invalid amplitude, duration or seeds are rejected."""
    with pytest.raises(InvalidSpecError, match=match):
        ExcitationSpec(**kwargs)


def test_abc_to_dq_aligned_cosines():
    """A balanced unit cosine triple aligned with the frame maps to d = 1, q = 0."""
    a, b, c = _balanced_cosines(500)
    d, q = abc_to_dq(a, b, c, OMEGA_G)

    assert_allclose(d.samples, 1.0, atol=1e-12)
    assert_allclose(q.samples, 0.0, atol=1e-12)


def test_abc_to_dq_quarter_turn_offset():
    """Rotating the frame by π/2 moves the vector onto the negative q axis."""
    a, b, c = _balanced_cosines(500)
    d, q = abc_to_dq(a, b, c, OMEGA_G, theta0=np.pi / 2)

    assert_allclose(d.samples, 0.0, atol=1e-12)
    assert_allclose(q.samples, -1.0, atol=1e-12)


def test_dq_to_abc_inverts_park():
    """Balanced signals survive abc -> dq -> abc."""
    rng = np.random.default_rng(0)
    n = 256
    d = RealTimeSeries(rng.standard_normal(n), TS)
    q = RealTimeSeries(rng.standard_normal(n), TS)

    a, b, c = dq_to_abc(d, q, OMEGA_G, theta0=0.3)
    assert_allclose(a.samples + b.samples + c.samples, 0.0, atol=1e-12)
    d2, q2 = abc_to_dq(a, b, c, OMEGA_G, theta0=0.3)

    assert_allclose(d2.samples, d.samples, atol=1e-12)
    assert_allclose(q2.samples, q.samples, atol=1e-12)


def test_abc_to_dq_rejects_mismatched_lengths():
    """Phases of different length cannot be transformed."""
    a, b, _ = _balanced_cosines(100)
    c = RealTimeSeries(np.zeros(99), TS)
    with pytest.raises(ShapeError, match="length"):
        abc_to_dq(a, b, c, OMEGA_G)


def test_remove_mean():
    """Mean removal leaves a zero-mean copy and does not touch the input."""
    series = DqTimeSeries(np.array([1 + 2j, 3 + 4j, 5 + 0j]), TS)
    centred = remove_mean(series)

    assert abs(centred.samples.mean()) < 1e-15
    assert_allclose(series.samples, [1 + 2j, 3 + 4j, 5 + 0j])
    assert centred.sample_period == TS


def test_pack_unpack_complex():
    """Packing and unpacking keep the d and q channels."""
    d = RealTimeSeries([1.0, 2.0], TS)
    q = RealTimeSeries([-1.0, 0.5], TS)
    packed = pack_complex(d, q)

    assert_allclose(packed.samples, [1 - 1j, 2 + 0.5j])
    d2, q2 = unpack_complex(packed)
    assert_allclose(d2.samples, d.samples)
    assert_allclose(q2.samples, q.samples)


def test_series_validation():
    """Empty or multi-dimensional samples and non-positive periods are rejected."""
    with pytest.raises(ShapeError):
        DqTimeSeries(np.array([]), TS)
    with pytest.raises(ShapeError):
        RealTimeSeries(np.zeros((2, 2)), TS)
    with pytest.raises(InvalidSpecError):
        RealTimeSeries([1.0], 0.0)


def test_remove_mean_is_idempotent():
    """A second mean removal leaves a zero-mean series unchanged."""
    rng = np.random.default_rng(5)
    series = DqTimeSeries(3.0 + 1j + rng.standard_normal(501) + 1j * rng.standard_normal(501), TS)
    once = remove_mean(series)
    twice = remove_mean(once)

    assert_allclose(twice.samples, once.samples, atol=1e-14)
    assert abs(once.samples.mean()) < 1e-14
