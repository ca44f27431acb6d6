from dataclasses import dataclass, field
from enum import Enum
import logging
import math
from typing import Dict, Iterable, List, Optional, Tuple

from dss.errors import ConfigError
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="radio/traffic.log",
)


class Rat(Enum):
    """
    Radio access technology serving a user.
    """

    LTE = 0
    NR = 1


class ShareMode(Enum):
    """
    Whether a user's RAT owns the whole band in a subframe or shares it with
    the other RAT. Selects the control-region overhead and capacity overrides.
    """

    ALONE = 0
    SHARED = 1


@dataclass(frozen=True)
class UserConfig:
    """
    Traffic, QoS and link configuration of one user.

    :param user_id: Identifier, also the scheduling tie-break (lower wins).
    :type user_id: int
    :param rat: The RAT the user is attached to.
    :type rat: Rat
    :param arrival_period: Periodicity lambda of packet arrivals in subframes.
    :type arrival_period: int
    :param packet_size: Packet size beta in bits.
    :type packet_size: int
    :param first_arrival: Subframe of the first arrival.
    :type first_arrival: int
    :param step_delay: Step delay delta in subframes.
    :type step_delay: int
    :param step_weight: Step weight eta added once the delay reaches delta.
    :type step_weight: float
    :param weight_slope: Slope alpha of the weight per subframe of delay.
    :type weight_slope: float
    :param distance: Distance to the base station in meters.
    :type distance: float
    :param arrival_count: [Optional] Number of packets the user ever receives.
    :type arrival_count: Optional[int]
    :param bits_per_prb_override: Pinned bits/PRB/subframe per sharing mode,
        replacing the link budget when present.
    :type bits_per_prb_override: Dict[ShareMode, float]
    """

    user_id: int
    rat: Rat
    arrival_period: int
    packet_size: int
    first_arrival: int = 0
    step_delay: int = 3
    step_weight: float = 5.0
    weight_slope: float = 1e-5
    distance: float = 100.0
    arrival_count: Optional[int] = None
    bits_per_prb_override: Dict[ShareMode, float] = field(default_factory=dict)

    def __hash__(self):
        return hash(
            (
                self.user_id,
                self.rat,
                self.arrival_period,
                self.packet_size,
                self.first_arrival,
                self.step_delay,
                self.step_weight,
                self.weight_slope,
                self.distance,
                self.arrival_count,
                tuple(sorted((m.name, v) for m, v in self.bits_per_prb_override.items())),
            )
        )

    def validate(self):
        if self.arrival_period < 1:
            raise ConfigError(
                f"User {self.user_id}: arrival_period must be >= 1, got {self.arrival_period}"
            )
        if self.packet_size < 0:
            raise ConfigError(
                f"User {self.user_id}: packet_size must be >= 0, got {self.packet_size}"
            )
        if self.step_delay < 1:
            raise ConfigError(
                f"User {self.user_id}: step_delay must be >= 1, got {self.step_delay}"
            )
        if self.step_weight < 0:
            raise ConfigError(
                f"User {self.user_id}: step_weight must be >= 0, got {self.step_weight}"
            )
        if self.weight_slope <= 0:
            raise ConfigError(
                f"User {self.user_id}: weight_slope must be > 0, got {self.weight_slope}"
            )
        if self.first_arrival < 0:
            raise ConfigError(
                f"User {self.user_id}: first_arrival must be >= 0, got {self.first_arrival}"
            )
        if self.arrival_count is not None and self.arrival_count < 0:
            raise ConfigError(
                f"User {self.user_id}: arrival_count must be >= 0, got {self.arrival_count}"
            )
        for mode, bits in self.bits_per_prb_override.items():
            if bits < 0:
                raise ConfigError(
                    f"User {self.user_id}: {mode.name.lower()} override must be >= 0, got {bits}"
                )

    def arrives_at(self, subframe: int) -> bool:
        """
        Checks whether a packet arrives in the given subframe.

        :param subframe: The subframe index p.
        :type subframe: int
        :returns: True if (p - first_arrival) is a nonnegative multiple of the
            period and the arrival budget is not exhausted.
        :rtype: bool
        """
        offset = subframe - self.first_arrival
        if offset < 0 or offset % self.arrival_period != 0:
            return False
        if self.arrival_count is not None:
            return offset // self.arrival_period < self.arrival_count
        return True

    def bits_arriving_at(self, subframe: int) -> int:
        return self.packet_size if self.arrives_at(subframe) else 0


def constant_override(bits_per_prb: float) -> Dict[ShareMode, float]:
    return {ShareMode.ALONE: bits_per_prb, ShareMode.SHARED: bits_per_prb}


class PacketQueue:
    """
    FIFO buffer of one user, holding ``[arrival_subframe, remaining_bits]``
    entries with nondecreasing arrival subframes and positive remaining bits.
    """

    def __init__(self, packets: Optional[Iterable[Tuple[int, int]]] = None):
        self._packets: List[List[int]] = []
        for arrival, bits in packets or []:
            self.push(arrival, bits)

    def __len__(self) -> int:
        return len(self._packets)

    def __eq__(self, other) -> bool:
        return isinstance(other, PacketQueue) and self._packets == other._packets

    def __repr__(self) -> str:
        return f"PacketQueue({self.packets})"

    @property
    def packets(self) -> List[Tuple[int, int]]:
        return [(arrival, bits) for arrival, bits in self._packets]

    @property
    def total_bits(self) -> int:
        return sum(bits for _, bits in self._packets)

    def is_empty(self) -> bool:
        return len(self._packets) == 0

    def oldest_arrival(self) -> Optional[int]:
        return self._packets[0][0] if self._packets else None

    def push(self, arrival_subframe: int, bits: int):
        """
        Enqueue a packet. Zero-bit packets are dropped since they never wait.

        :param arrival_subframe: Subframe stamp of the packet.
        :type arrival_subframe: int
        :param bits: Packet size in bits.
        :type bits: int
        """
        if bits <= 0:
            return
        if self._packets:
            assert (
                arrival_subframe >= self._packets[-1][0]
            ), f"Arrivals must be nondecreasing, got {arrival_subframe} after {self._packets[-1][0]}"
        self._packets.append([int(arrival_subframe), int(bits)])

    def drain(self, bits: int) -> int:
        """
        Serve up to ``bits`` bits, oldest packets first.

        :param bits: Number of bits the allocation can carry.
        :type bits: int
        :returns: Number of bits actually served.
        :rtype: int
        """
        served = 0
        budget = int(bits)
        while budget > 0 and self._packets:
            head = self._packets[0]
            take = min(budget, head[1])
            head[1] -= take
            budget -= take
            served += take
            if head[1] == 0:
                self._packets.pop(0)
        return served

    def waiting_time(self, subframe: int) -> int:
        """
        Time the oldest packet has been waiting at subframe ``p``, or 0 if empty.
        """
        oldest = self.oldest_arrival()
        return 0 if oldest is None else subframe - oldest

    def copy(self) -> "PacketQueue":
        clone = PacketQueue()
        clone._packets = [list(entry) for entry in self._packets]
        return clone


def user_weight(waited: int, cfg: UserConfig, buffer_empty: bool) -> float:
    """
    Delay weight of one user: 0 for an empty buffer, alpha t below the step
    delay and alpha t + eta from the step delay on.

    :param waited: Subframes t the oldest packet has been waiting.
    :type waited: int
    :param cfg: The user's configuration.
    :type cfg: UserConfig
    :param buffer_empty: Whether the buffer is empty.
    :type buffer_empty: bool
    :returns: The weight.
    :rtype: float
    """
    assert waited >= 0, f"Waiting time must be nonnegative, got {waited}"
    if buffer_empty:
        return 0.0
    if waited < cfg.step_delay:
        return cfg.weight_slope * waited
    return cfg.weight_slope * waited + cfg.step_weight


def queue_weight(queue: PacketQueue, cfg: UserConfig, subframe: int) -> float:
    return user_weight(queue.waiting_time(subframe), cfg, queue.is_empty())


def subframe_reward(weights: Iterable[float]) -> float:
    """
    Reward exp(-sum of weights), in (0, 1] for nonnegative weights.
    """
    total = 0.0
    for weight in weights:
        assert weight >= 0, f"Weights must be nonnegative, got {weight}"
        total += weight
    return math.exp(-total)
