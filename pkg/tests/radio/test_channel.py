import math

import numpy as np
import pytest

from dss.errors import DomainError
from dss.radio.channel import (
    RadioParams,
    achievable_rate,
    dbm_to_watts,
    path_loss,
    rayleigh_power_gains,
    snr,
)


@pytest.mark.parametrize(
    "distance, expected",
    [(1.0, 20.4), (100.0, 95.6), (1000.0, 133.2)],
)
def test_path_loss(distance, expected):
    assert path_loss(distance) == pytest.approx(expected)


def test_path_loss_rejects_distances_below_one_meter():
    with pytest.raises(DomainError):
        path_loss(0.5)


def test_snr_of_zero_channel_is_zero():
    assert snr(0.8, 0.0, 95.6, dbm_to_watts(-112.5)) == 0.0


def test_snr_at_100_m():
    gamma = snr(0.8, 1.0, 95.6, dbm_to_watts(-112.5))
    assert gamma == pytest.approx(3.91e4, rel=5e-3)
    assert 10 * math.log10(gamma) == pytest.approx(45.93, abs=0.01)


def test_snr_is_linear_in_power():
    noise = dbm_to_watts(-112.5)
    assert snr(1.6, 1.0, 95.6, noise) == pytest.approx(2 * snr(0.8, 1.0, 95.6, noise))


def test_snr_rejects_nonpositive_noise():
    with pytest.raises(DomainError):
        snr(0.8, 1.0, 95.6, 0.0)


def test_dbm_to_watts():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert RadioParams().noise_power_per_prb_w == pytest.approx(10 ** (-14.25))


def test_achievable_rate_without_prbs():
    assert achievable_rate(0, 1.0, 180_000.0, 5.55) == 0.0


def test_achievable_rate_unit_snr():
    assert achievable_rate(1, 1.0, 180_000.0, 100.0) == pytest.approx(180_000.0)


def test_achievable_rate_hits_the_cap():
    assert achievable_rate(1, 3.91e4, 180_000.0, 5.55) == pytest.approx(999_000.0)
    assert achievable_rate(25, 3.91e4, 180_000.0, 5.55) == pytest.approx(25 * 999_000.0)


def test_achievable_rate_per_prb_snr():
    rate = achievable_rate(2, np.array([1.0, 3.0]), 180_000.0, 100.0)
    assert rate == pytest.approx(180_000.0 * 3)


def test_rayleigh_gains_are_seeded_exponentials():
    first = rayleigh_power_gains(np.random.default_rng(5), 2, 20000)
    second = rayleigh_power_gains(np.random.default_rng(5), 2, 20000)
    assert first.shape == (2, 20000)
    assert np.array_equal(first, second)
    assert (first >= 0).all()
    assert first.mean() == pytest.approx(1.0, abs=0.03)
