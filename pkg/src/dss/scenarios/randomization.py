from dataclasses import dataclass, replace
import logging
from typing import Optional, Tuple

import numpy as np

from dss.errors import ConfigError
from dss.scenarios.config import ScenarioConfig
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="scenarios/randomization.log",
)


@dataclass(frozen=True)
class RandomizationSpec:
    """
    Ranges for sampling training environments around a base scenario. The
    topology (users, RATs, MBSFN and interference patterns) is kept.

    :param base: Scenario the samples are drawn around.
    :type base: ScenarioConfig
    :param packet_size_scale: Uniform factor range applied to every packet size.
    :type packet_size_scale: Tuple[float, float]
    :param packet_size_range: [Optional] Absolute packet size range in bits;
        replaces the scale when given.
    :type packet_size_range: Optional[Tuple[int, int]]
    :param randomize_arrival_phase: Whether first arrivals are shifted by a
        uniform integer in 0..lambda - 1.
    :type randomize_arrival_phase: bool
    :param max_phase_shift: [Optional] Cap on the arrival phase shift, None
        covers the whole period.
    :type max_phase_shift: Optional[int]
    :param period_jitter: Integer range added to every arrival period.
    :type period_jitter: Tuple[int, int]
    :param distance_m: [Optional] Uniform distance range in meters, None keeps
        the base distances. Distance only reaches the link budget of users
        without a bits/PRB override; the pinned scenarios override every
        user, so it has no effect there unless the overrides are dropped.
        With the default radio parameters the rate sits at the spectral
        efficiency cap up to about 600 m.
    :type distance_m: Optional[Tuple[float, float]]
    :param keep_capacity_overrides: Whether pinned bits/PRB survive sampling.
    :type keep_capacity_overrides: bool
    :param seed: Seed of the sampler when no generator is passed.
    :type seed: int
    """

    base: ScenarioConfig
    packet_size_scale: Tuple[float, float] = (0.5, 1.5)
    packet_size_range: Optional[Tuple[int, int]] = None
    randomize_arrival_phase: bool = True
    max_phase_shift: Optional[int] = None
    period_jitter: Tuple[int, int] = (0, 0)
    distance_m: Optional[Tuple[float, float]] = (50.0, 500.0)
    keep_capacity_overrides: bool = True
    seed: int = 0

    def validate(self) -> "RandomizationSpec":
        ranges = {
            "packet_size_scale": self.packet_size_scale,
            "packet_size_range": self.packet_size_range,
            "period_jitter": self.period_jitter,
            "distance_m": self.distance_m,
        }
        for name, bounds in ranges.items():
            if bounds is None:
                continue
            lo, hi = bounds
            if lo > hi:
                raise ConfigError(f"Empty range for {name}: [{lo}, {hi}]")
        if self.packet_size_scale[0] < 0:
            raise ConfigError(f"packet_size_scale must be nonnegative, got {self.packet_size_scale}")
        if self.packet_size_range is not None and self.packet_size_range[0] < 0:
            raise ConfigError(f"packet_size_range must be nonnegative, got {self.packet_size_range}")
        if self.distance_m is not None and self.distance_m[0] < 1.0:
            raise ConfigError(f"distance_m must start at 1 m or more, got {self.distance_m}")
        if self.max_phase_shift is not None and self.max_phase_shift < 0:
            raise ConfigError(f"max_phase_shift must be >= 0, got {self.max_phase_shift}")
        self.base.validate()
        return self

    @staticmethod
    def fixed(base: ScenarioConfig) -> "RandomizationSpec":
        """
        Degenerate spec that always returns the base scenario.
        """
        return RandomizationSpec(
            base=base,
            packet_size_scale=(1.0, 1.0),
            randomize_arrival_phase=False,
            distance_m=None,
        )


def _uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    lo, hi = bounds
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def _integer(rng: np.random.Generator, lo: int, hi: int) -> int:
    return int(lo) if lo == hi else int(rng.integers(lo, hi + 1))


def sample_environment(
    spec: RandomizationSpec, rng: Optional[np.random.Generator] = None
) -> ScenarioConfig:
    """
    Samples one training scenario uniformly within the spec's ranges.

    :param spec: The randomization ranges.
    :type spec: RandomizationSpec
    :param rng: [Optional] Generator to draw from, defaults to one seeded
        with ``spec.seed``.
    :type rng: Optional[np.random.Generator]
    :returns: A validated scenario with the base topology.
    :rtype: ScenarioConfig
    :raises ConfigError: On an empty range.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    users = []
    for user in spec.base.users:
        if spec.packet_size_range is not None:
            lo, hi = spec.packet_size_range
            packet_size = _integer(rng, int(lo), int(hi))
        else:
            packet_size = int(round(user.packet_size * _uniform(rng, spec.packet_size_scale)))
        period = max(1, user.arrival_period + _integer(rng, *spec.period_jitter))
        first_arrival = user.first_arrival
        if spec.randomize_arrival_phase:
            shift = period - 1 if spec.max_phase_shift is None else min(period - 1, spec.max_phase_shift)
            first_arrival += _integer(rng, 0, shift)
        distance = user.distance if spec.distance_m is None else _uniform(rng, spec.distance_m)
        users.append(
            replace(
                user,
                packet_size=packet_size,
                arrival_period=period,
                first_arrival=first_arrival,
                distance=distance,
                bits_per_prb_override=(
                    dict(user.bits_per_prb_override) if spec.keep_capacity_overrides else {}
                ),
            )
        )
    sampled = replace(spec.base, users=tuple(users)).validate()
    logger.debug(
        f"Sampled {sampled.name}: sizes={[u.packet_size for u in users]} "
        f"periods={[u.arrival_period for u in users]} "
        f"phases={[u.first_arrival for u in users]}"
    )
    return sampled
