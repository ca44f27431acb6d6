from dataclasses import dataclass
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from dss.errors import ConfigError, DimensionError, EpisodeFinishedError
from dss.radio.channel import (
    SUBFRAME_SECONDS,
    RadioParams,
    achievable_rate,
    path_loss,
    rayleigh_power_gains,
    snr,
)
from dss.radio.traffic import (
    PacketQueue,
    Rat,
    ShareMode,
    UserConfig,
    queue_weight,
    subframe_reward,
)
from dss.scenarios.config import ScenarioConfig
from dss.utils.logger import getLogger
from dss.utils.seeding import make_rng


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="radio/environment.log",
)

# Slack for float capacities such as 14112/25 bits per PRB
_CAPACITY_EPS = 1e-9


@dataclass(frozen=True)
class Action:
    """
    One entry of the quantized bandwidth-split action set. LTE owns the lower
    ``lte_prbs`` PRBs and NR owns the rest.
    """

    index: int
    lte_prbs: int
    total_prbs: int

    @property
    def nr_prbs(self) -> int:
        return self.total_prbs - self.lte_prbs


def action_space(action_count: int, total_prbs: int) -> List[Action]:
    """
    Builds the quantized action set: action ``i`` gives LTE
    round_half_up(C i / (N - 1)) PRBs.

    :param action_count: Number of actions N.
    :type action_count: int
    :param total_prbs: Number of PRBs C of the band.
    :type total_prbs: int
    :returns: The N actions ordered by increasing LTE share.
    :rtype: List[Action]
    :raises ConfigError: If N < 2.
    """
    if action_count < 2:
        raise ConfigError(f"The action space needs at least 2 actions, got N={action_count}")
    if total_prbs < 1:
        raise ConfigError(f"total_prbs must be >= 1, got {total_prbs}")
    denominator = action_count - 1
    return [
        Action(
            index=i,
            lte_prbs=(2 * total_prbs * i + denominator) // (2 * denominator),
            total_prbs=total_prbs,
        )
        for i in range(action_count)
    ]


def resolve_action(scenario: ScenarioConfig, action: Union[int, Action]) -> Action:
    index = action.index if isinstance(action, Action) else int(action)
    if not 0 <= index < scenario.action_count:
        raise DimensionError(
            f"Action index {index} outside the action space of size {scenario.action_count}"
        )
    return action_space(scenario.action_count, scenario.radio.total_prbs)[index]


@dataclass(frozen=True)
class SubframeContext:
    """
    Schedule-relevant facts of one subframe.

    :param subframe_index: The subframe p.
    :type subframe_index: int
    :param is_mbsfn: Per user, True for an LTE user in an MBSFN subframe.
        Always False for NR users.
    :type is_mbsfn: Tuple[bool, ...]
    :param interfered_users: User ids hit by their interference pattern in p.
    :type interfered_users: frozenset
    :param lte_scheduled: Whether LTE owns at least one PRB in p.
    :type lte_scheduled: bool
    :param nr_scheduled: Whether NR owns at least one PRB in p.
    :type nr_scheduled: bool
    """

    subframe_index: int
    is_mbsfn: Tuple[bool, ...]
    interfered_users: frozenset
    lte_scheduled: bool
    nr_scheduled: bool


def make_context(
    scenario: ScenarioConfig, subframe: int, lte_prbs: int
) -> SubframeContext:
    mbsfn = scenario.mbsfn.is_mbsfn(subframe)
    return SubframeContext(
        subframe_index=subframe,
        is_mbsfn=tuple(mbsfn and u.rat == Rat.LTE for u in scenario.users),
        interfered_users=scenario.interfered_users(subframe),
        lte_scheduled=lte_prbs > 0,
        nr_scheduled=lte_prbs < scenario.radio.total_prbs,
    )


def full_band_context(scenario: ScenarioConfig, subframe: int, rat: Rat) -> SubframeContext:
    """
    Context of subframe ``subframe`` in which ``rat`` owns the whole band.
    """
    lte_prbs = scenario.radio.total_prbs if rat == Rat.LTE else 0
    return make_context(scenario, subframe, lte_prbs)


def share_mode(user: UserConfig, context: SubframeContext) -> ShareMode:
    other_scheduled = context.nr_scheduled if user.rat == Rat.LTE else context.lte_scheduled
    return ShareMode.SHARED if other_scheduled else ShareMode.ALONE


def data_symbols(radio: RadioParams, rat: Rat, mode: ShareMode) -> int:
    if rat == Rat.LTE:
        return radio.lte_data_symbols
    if mode == ShareMode.ALONE:
        return radio.nr_alone_data_symbols
    return radio.nr_shared_data_symbols


def bits_per_prb(
    scenario: ScenarioConfig,
    user_index: int,
    context: SubframeContext,
    fading_gain: float = 1.0,
) -> float:
    """
    Bits one PRB carries for a user in one subframe.

    MBSFN subframes (LTE users) and interfered subframes carry nothing. Next,
    a pinned override for the user's sharing mode wins. Otherwise the link
    budget gives the per-PRB rate over 1 ms scaled by the data-symbol fraction.

    :param scenario: The scenario holding the user.
    :type scenario: ScenarioConfig
    :param user_index: Position of the user in ``scenario.users``.
    :type user_index: int
    :param context: The subframe context.
    :type context: SubframeContext
    :param fading_gain: Linear power gain of the channel in this subframe.
    :type fading_gain: float
    :returns: Bits per PRB per subframe.
    :rtype: float
    """
    user = scenario.users[user_index]
    if context.is_mbsfn[user_index] or user.user_id in context.interfered_users:
        return 0.0
    mode = share_mode(user, context)
    if mode in user.bits_per_prb_override:
        return float(user.bits_per_prb_override[mode])
    radio = scenario.radio
    gamma = snr(
        radio.tx_power_per_prb_w,
        fading_gain,
        path_loss(user.distance),
        radio.noise_power_per_prb_w,
    )
    rate = achievable_rate(1, gamma, radio.prb_bandwidth_hz, radio.spectral_efficiency_cap)
    fraction = data_symbols(radio, user.rat, mode) / radio.symbols_per_subframe
    return rate * SUBFRAME_SECONDS * fraction


def max_bits_per_prb(scenario: ScenarioConfig) -> float:
    """
    Largest unfaded bits/PRB of any user whose RAT owns the whole band, over
    one MBSFN and interference period. Used to normalize observations.
    """
    horizon = max(
        [scenario.mbsfn.period] + [p.period + p.phase for p in scenario.interference]
    )
    best = 0.0
    for index, user in enumerate(scenario.users):
        for subframe in range(horizon):
            context = full_band_context(scenario, subframe, user.rat)
            best = max(best, bits_per_prb(scenario, index, context))
    return best


class NetworkState:
    """
    Simulator truth between two subframes.

    ``subframe_index`` is the next subframe to simulate. Queues are ordered like
    ``scenario.users``. Fading gains, when enabled, are drawn once per episode
    from ``rng_seed`` so any state is replayable from its seed and actions.
    """

    def __init__(
        self,
        scenario: ScenarioConfig,
        queues: List[PacketQueue],
        subframe_index: int = 0,
        rng_seed: int = 0,
        fading_gains: Optional[NDArray] = None,
        arrived_bits: Optional[List[int]] = None,
        served_bits: Optional[List[int]] = None,
    ):
        assert len(queues) == scenario.num_users, (
            f"Expected {scenario.num_users} queues, got {len(queues)}"
        )
        self.scenario = scenario
        self.queues = queues
        self.subframe_index = subframe_index
        self.rng_seed = rng_seed
        self.fading_gains = fading_gains
        self.arrived_bits = arrived_bits or [0] * scenario.num_users
        self.served_bits = served_bits or [0] * scenario.num_users

    @staticmethod
    def initial(scenario: ScenarioConfig, seed: int = 0) -> "NetworkState":
        """
        Fresh episode state with empty buffers at subframe 0.

        :param scenario: The scenario to simulate.
        :type scenario: ScenarioConfig
        :param seed: Episode seed, drives the Rayleigh gains when enabled.
        :type seed: int
        :returns: The initial state.
        :rtype: NetworkState
        """
        gains = None
        if scenario.rayleigh_fading:
            # Look-ahead columns past the episode end are predicted as well
            gains = rayleigh_power_gains(
                make_rng(seed),
                scenario.num_users,
                scenario.episode_length + scenario.window,
            )
        return NetworkState(
            scenario=scenario,
            queues=[PacketQueue() for _ in scenario.users],
            subframe_index=0,
            rng_seed=seed,
            fading_gains=gains,
        )

    @property
    def params(self) -> RadioParams:
        return self.scenario.radio

    @property
    def users(self) -> List[Tuple[UserConfig, PacketQueue]]:
        return list(zip(self.scenario.users, self.queues))

    @property
    def finished(self) -> bool:
        return self.subframe_index >= self.scenario.episode_length

    def fading_gain(self, user_index: int, subframe: int) -> float:
        if self.fading_gains is None or subframe >= self.fading_gains.shape[1]:
            return 1.0
        return float(self.fading_gains[user_index, subframe])

    def buffer_bits(self) -> List[int]:
        return [queue.total_bits for queue in self.queues]

    def weights(self) -> List[float]:
        """
        Current per-user weights, with t measured at the next subframe.
        """
        return [
            queue_weight(queue, user, self.subframe_index)
            for user, queue in self.users
        ]

    def copy(self) -> "NetworkState":
        return NetworkState(
            scenario=self.scenario,
            queues=[queue.copy() for queue in self.queues],
            subframe_index=self.subframe_index,
            rng_seed=self.rng_seed,
            fading_gains=self.fading_gains,
            arrived_bits=list(self.arrived_bits),
            served_bits=list(self.served_bits),
        )

    def to_dict(self) -> Dict:
        return {
            "scenario": self.scenario.name,
            "subframe_index": self.subframe_index,
            "rng_seed": self.rng_seed,
            "queues": [queue.packets for queue in self.queues],
            "arrived_bits": list(self.arrived_bits),
            "served_bits": list(self.served_bits),
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkState):
            return False
        same_gains = (self.fading_gains is None and other.fading_gains is None) or (
            self.fading_gains is not None
            and other.fading_gains is not None
            and np.array_equal(self.fading_gains, other.fading_gains)
        )
        return (
            self.scenario == other.scenario
            and self.queues == other.queues
            and self.subframe_index == other.subframe_index
            and self.arrived_bits == other.arrived_bits
            and self.served_bits == other.served_bits
            and same_gains
        )


@dataclass(frozen=True)
class ScheduleResult:
    """
    Outcome of scheduling one subframe. Per-user tuples follow ``scenario.users``.
    """

    subframe_index: int
    action: Action
    allocated_prbs: Tuple[int, ...]
    served_bits: Tuple[int, ...]
    weights: Tuple[float, ...]
    reward: float

    @property
    def lte_prbs(self) -> int:
        return self.action.lte_prbs

    @property
    def nr_prbs(self) -> int:
        return self.action.nr_prbs


def apply_arrivals(state: NetworkState) -> NetworkState:
    """
    Enqueues the packets arriving in subframe p into a copy of the state.

    :param state: State before the arrivals of p.
    :type state: NetworkState
    :returns: A new state; the input is left untouched.
    :rtype: NetworkState
    """
    arrived = state.copy()
    p = arrived.subframe_index
    for index, user in enumerate(arrived.scenario.users):
        bits = user.bits_arriving_at(p)
        if bits > 0:
            arrived.queues[index].push(p, bits)
            arrived.arrived_bits[index] += bits
    return arrived


def _schedule_rat(
    state: NetworkState,
    rat: Rat,
    budget: int,
    context: SubframeContext,
    allocated: List[int],
    served: List[int],
):
    scenario = state.scenario
    p = state.subframe_index
    members = [i for i, user in enumerate(scenario.users) if user.rat == rat]
    pre_weights = {
        i: queue_weight(state.queues[i], scenario.users[i], p) for i in members
    }
    order = sorted(members, key=lambda i: (-pre_weights[i], scenario.users[i].user_id))
    remaining = budget
    for i in order:
        queue = state.queues[i]
        if remaining == 0:
            break
        if queue.is_empty():
            continue
        capacity = bits_per_prb(scenario, i, context, state.fading_gain(i, p))
        if capacity <= 0:
            continue
        needed = math.ceil(queue.total_bits / capacity - _CAPACITY_EPS)
        granted = min(needed, remaining)
        deliverable = math.floor(granted * capacity + _CAPACITY_EPS)
        served[i] = queue.drain(deliverable)
        state.served_bits[i] += served[i]
        allocated[i] = granted
        remaining -= granted


def schedule_subframe(state: NetworkState, action: Union[int, Action]) -> ScheduleResult:
    """
    Runs both per-RAT schedulers for subframe p on ``state`` in place.

    Within each RAT users are served in descending weight order (ties to the
    lower user id), each taking the PRBs it needs up to the RAT's remaining
    budget and draining its oldest packets first. Weights and reward are then
    computed on the drained buffers with t measured at p.

    :param state: State after the arrivals of p. Mutated.
    :type state: NetworkState
    :param action: Action index or Action of the bandwidth split.
    :type action: Union[int, Action]
    :returns: Allocations, served bits, weights and the reward of p.
    :rtype: ScheduleResult
    """
    scenario = state.scenario
    split = resolve_action(scenario, action)
    p = state.subframe_index
    context = make_context(scenario, p, split.lte_prbs)
    allocated = [0] * scenario.num_users
    served = [0] * scenario.num_users
    _schedule_rat(state, Rat.LTE, split.lte_prbs, context, allocated, served)
    _schedule_rat(state, Rat.NR, split.nr_prbs, context, allocated, served)
    weights = [queue_weight(queue, user, p) for user, queue in state.users]
    return ScheduleResult(
        subframe_index=p,
        action=split,
        allocated_prbs=tuple(allocated),
        served_bits=tuple(served),
        weights=tuple(weights),
        reward=subframe_reward(weights),
    )


def env_step(
    state: NetworkState, action: Union[int, Action]
) -> Tuple[NetworkState, float, ScheduleResult]:
    """
    Simulates subframe p: arrivals, scheduling, reward, then p + 1.

    :param state: Current state; left untouched.
    :type state: NetworkState
    :param action: Bandwidth-split action.
    :type action: Union[int, Action]
    :returns: The next state, the reward and the schedule details.
    :rtype: Tuple[NetworkState, float, ScheduleResult]
    :raises EpisodeFinishedError: If the episode already ended.
    """
    if state.finished:
        raise EpisodeFinishedError(
            f"Episode of {state.scenario.episode_length} subframes already finished "
            f"(p={state.subframe_index}), reset the environment first"
        )
    next_state = apply_arrivals(state)
    result = schedule_subframe(next_state, action)
    next_state.subframe_index += 1
    return next_state, result.reward, result


def rollout(
    scenario: ScenarioConfig, actions: Sequence[Union[int, Action]], seed: int = 0
) -> Tuple[float, List[ScheduleResult]]:
    """
    Plays a fixed action sequence from a fresh episode.

    :returns: The summed reward and the per-subframe results.
    :rtype: Tuple[float, List[ScheduleResult]]
    """
    state = NetworkState.initial(scenario, seed)
    results: List[ScheduleResult] = []
    score = 0.0
    for action in actions:
        state, reward, result = env_step(state, action)
        score += reward
        results.append(result)
    return score, results
