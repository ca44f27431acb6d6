from dataclasses import dataclass
import logging
import math
from typing import Union

import numpy as np
from numpy.typing import NDArray

from dss.errors import ConfigError, DomainError
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="radio/channel.log",
)

SUBFRAME_SECONDS = 1e-3


@dataclass(frozen=True)
class RadioParams:
    """
    Cell-level radio parameters shared by every user of one co-located LTE+NR cell.

    :param carrier_freq_ghz: Carrier frequency. Only reported; the path loss
        model already assumes the configured band.
    :type carrier_freq_ghz: float
    :param total_prbs: Number of PRBs C in the shared band.
    :type total_prbs: int
    :param prb_bandwidth_hz: Bandwidth B_c of one PRB.
    :type prb_bandwidth_hz: float
    :param tx_power_per_prb_w: Transmit power P per PRB in watts.
    :type tx_power_per_prb_w: float
    :param noise_power_per_prb_dbm: Noise power per PRB in dBm.
    :type noise_power_per_prb_dbm: float
    :param spectral_efficiency_cap: Upper bound on log2(1 + SNR), in bits/s/Hz.
    :type spectral_efficiency_cap: float
    :param symbols_per_subframe: OFDM symbols in one 1 ms subframe.
    :type symbols_per_subframe: int
    :param lte_data_symbols: Symbols left for LTE data after its control region.
    :type lte_data_symbols: int
    :param nr_shared_data_symbols: NR data symbols when LTE also owns part of the band.
    :type nr_shared_data_symbols: int
    :param nr_alone_data_symbols: NR data symbols when NR owns the whole band.
    :type nr_alone_data_symbols: int
    """

    carrier_freq_ghz: float = 3.5
    total_prbs: int = 25
    prb_bandwidth_hz: float = 180_000.0
    tx_power_per_prb_w: float = 0.8
    noise_power_per_prb_dbm: float = -112.5
    spectral_efficiency_cap: float = 5.55
    symbols_per_subframe: int = 14
    lte_data_symbols: int = 12
    nr_shared_data_symbols: int = 11
    nr_alone_data_symbols: int = 13

    def validate(self):
        if self.total_prbs < 1:
            raise ConfigError(f"total_prbs must be >= 1, got {self.total_prbs}")
        if self.prb_bandwidth_hz <= 0:
            raise ConfigError(f"prb_bandwidth_hz must be > 0, got {self.prb_bandwidth_hz}")
        if self.tx_power_per_prb_w <= 0:
            raise ConfigError(
                f"tx_power_per_prb_w must be > 0, got {self.tx_power_per_prb_w}"
            )
        if self.spectral_efficiency_cap <= 0:
            raise ConfigError(
                f"spectral_efficiency_cap must be > 0, got {self.spectral_efficiency_cap}"
            )
        for name in ("lte_data_symbols", "nr_shared_data_symbols", "nr_alone_data_symbols"):
            symbols = getattr(self, name)
            if not 0 < symbols <= self.symbols_per_subframe:
                raise ConfigError(
                    f"{name} must be in (0, {self.symbols_per_subframe}], got {symbols}"
                )

    @property
    def noise_power_per_prb_w(self) -> float:
        return dbm_to_watts(self.noise_power_per_prb_dbm)


def dbm_to_watts(power_dbm: float) -> float:
    return 10.0 ** (power_dbm / 10.0 - 3.0)


def path_loss(distance_m: float) -> float:
    """
    Distance dependent path loss in dB, 20.4 + 37.6 log10(d).

    :param distance_m: Distance between user and base station in meters.
    :type distance_m: float
    :returns: Path loss in dB.
    :rtype: float
    :raises DomainError: If the distance is below 1 m, where the model is invalid.
    """
    if distance_m < 1.0:
        raise DomainError(f"Path loss model is invalid below 1 m, got d={distance_m}")
    return 20.4 + 37.6 * math.log10(distance_m)


def snr(
    tx_power_per_prb_w: float,
    fading_gain: float,
    path_loss_db: float,
    noise_per_prb_w: float,
) -> float:
    """
    Linear signal-to-noise ratio on one PRB, P g 10^(-xi/10) / noise.
    """
    if noise_per_prb_w <= 0:
        raise DomainError(f"Noise power must be positive, got {noise_per_prb_w}")
    if tx_power_per_prb_w < 0 or fading_gain < 0:
        raise DomainError(
            f"Power and gain must be nonnegative, got P={tx_power_per_prb_w}, g={fading_gain}"
        )
    return tx_power_per_prb_w * fading_gain * 10.0 ** (-path_loss_db / 10.0) / noise_per_prb_w


def achievable_rate(
    prbs: int,
    snr_per_prb: Union[float, NDArray],
    prb_bandwidth_hz: float,
    spectral_efficiency_cap: float,
) -> float:
    """
    Achievable rate in bits/s over ``prbs`` PRBs, summing
    B_c min(log2(1 + SNR), cap) per PRB.

    :param prbs: Number of allocated PRBs.
    :type prbs: int
    :param snr_per_prb: One SNR shared by all PRBs, or one value per PRB.
    :type snr_per_prb: Union[float, NDArray]
    :param prb_bandwidth_hz: PRB bandwidth B_c.
    :type prb_bandwidth_hz: float
    :param spectral_efficiency_cap: Cap on bits/s/Hz.
    :type spectral_efficiency_cap: float
    :returns: Rate in bits/s.
    :rtype: float
    """
    assert prbs >= 0, f"PRB count must be nonnegative, got {prbs}"
    if prbs == 0:
        return 0.0
    snr_values = np.broadcast_to(np.asarray(snr_per_prb, dtype=np.float64), (prbs,))
    efficiency = np.minimum(np.log2(1.0 + snr_values), spectral_efficiency_cap)
    return float(np.sum(prb_bandwidth_hz * efficiency))


def rayleigh_power_gains(
    rng: np.random.Generator, num_users: int, num_subframes: int
) -> NDArray:
    """
    Draw |h|^2 of a unit-power Rayleigh channel, i.e. Exp(1) samples, for every
    (user, subframe) pair of one episode.
    """
    return rng.exponential(1.0, size=(num_users, num_subframes))
