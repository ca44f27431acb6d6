from abc import ABC, abstractmethod
from dataclasses import replace
import logging
import math
from typing import List, Optional

import numpy as np
import torch

from dss.eval.oracle import DEFAULT_NODE_BUDGET, oracle_plan
from dss.model.network import MuZeroNetwork
from dss.planning.mcts import SearchConfig, run_search, sample_action
from dss.radio.environment import (
    Action,
    NetworkState,
    action_space,
    apply_arrivals,
    bits_per_prb,
    make_context,
)
from dss.radio.observation import Observation
from dss.radio.traffic import Rat
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="eval/agents.log",
)


def nearest_action(actions: List[Action], lte_share: float) -> Action:
    """
    Action whose LTE PRB count is closest to ``lte_share``; ties go to the
    action with more LTE PRBs.
    """
    return min(actions, key=lambda a: (abs(a.lte_prbs - lte_share), -a.lte_prbs))


class Agent(ABC):
    """
    Bandwidth-split controller. ``act`` sees the observation of the next
    subframe and the simulator state it was built from; learned agents only
    read the observation.
    """

    name: str = "agent"

    def reset(self, state: NetworkState):
        """
        Called at the start of every episode.
        """

    @abstractmethod
    def act(self, observation: Observation, state: NetworkState) -> int:
        ...


class MuZeroAgent(Agent):
    """
    Execution-phase controller: encodes the observation with h, reads the
    policy of f and takes its argmax. Never calls g and never searches.
    """

    name = "muzero"

    def __init__(self, network: MuZeroNetwork):
        self.network = network

    def act(self, observation: Observation, state: NetworkState) -> int:
        with torch.no_grad():
            hidden = self.network.represent(observation.flatten())
            policy, _ = self.network.predict(hidden)
        return int(torch.argmax(policy))


class PlanningAgent(Agent):
    """
    Search-at-test-time controller, greedy over the visit counts. Experimental.
    """

    name = "muzero_search"

    def __init__(self, network: MuZeroNetwork, config: SearchConfig, seed: int = 0):
        self.network = network
        self.config = replace(config, root_noise=False, temperature=0.0)
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def reset(self, state: NetworkState):
        self.rng = np.random.default_rng(self.seed)

    def act(self, observation: Observation, state: NetworkState) -> int:
        result = run_search(self.network, observation.flatten(), self.config, self.rng)
        return sample_action(result.policy, 0.0, self.rng)


class ProportionalAgent(Agent):
    """
    Scripted baseline splitting the band in proportion to the PRBs each RAT
    needs. Reads the true buffers after the arrivals of p.

    Every backlogged user counts ceil(bits / bits_per_prb) PRBs in a shared
    subframe, so both RATs contribute their full demand even when one of them
    alone exceeds C. Users without capacity in the subframe are skipped.
    """

    name = "proportional"

    def demand(self, state: NetworkState) -> dict:
        scenario = state.scenario
        arrived = apply_arrivals(state)
        p = arrived.subframe_index
        shared = replace(make_context(scenario, p, 0), lte_scheduled=True, nr_scheduled=True)
        needed = {Rat.LTE: 0, Rat.NR: 0}
        for i in range(scenario.num_users):
            queue = arrived.queues[i]
            if queue.is_empty():
                continue
            capacity = bits_per_prb(scenario, i, shared, arrived.fading_gain(i, p))
            if capacity <= 0:
                continue
            prbs = math.ceil(queue.total_bits / capacity - 1e-9)
            needed[scenario.users[i].rat] += prbs
        return needed

    def act(self, observation: Observation, state: NetworkState) -> int:
        scenario = state.scenario
        actions = action_space(scenario.action_count, scenario.radio.total_prbs)
        needed = self.demand(state)
        total = needed[Rat.LTE] + needed[Rat.NR]
        if total == 0:
            return 0
        share = scenario.radio.total_prbs * needed[Rat.LTE] / total
        return nearest_action(actions, share).index


class EqualSplitAgent(Agent):
    name = "equal"

    def act(self, observation: Observation, state: NetworkState) -> int:
        scenario = state.scenario
        actions = action_space(scenario.action_count, scenario.radio.total_prbs)
        return nearest_action(actions, scenario.radio.total_prbs / 2).index


class AlternatingAgent(Agent):
    """
    Gives the whole band to one RAT per subframe, switching every subframe.
    NR-first serves NR on even subframes.
    """

    def __init__(self, lte_first: bool = False):
        self.lte_first = lte_first
        self.name = "alternating_lte_first" if lte_first else "alternating_nr_first"

    def act(self, observation: Observation, state: NetworkState) -> int:
        lte_turn = (state.subframe_index % 2 == 1) != self.lte_first
        return state.scenario.action_count - 1 if lte_turn else 0


class ScriptedAgent(Agent):
    """
    Replays a fixed action sequence, used for oracle plans and hand-built
    schedules.
    """

    def __init__(self, actions: List[int], name: str = "scripted"):
        self.actions = list(actions)
        self.name = name

    def act(self, observation: Observation, state: NetworkState) -> int:
        p = state.subframe_index
        assert p < len(self.actions), f"No scripted action for subframe {p}"
        return self.actions[p]


class OracleAgent(Agent):
    """
    Plans the whole episode on the true environment at reset and replays it.
    """

    name = "oracle"

    def __init__(self, node_budget: Optional[int] = None):
        self.node_budget = node_budget
        self.plan: List[int] = []

    def reset(self, state: NetworkState):
        plan = oracle_plan(
            state.scenario,
            horizon=state.scenario.episode_length,
            seed=state.rng_seed,
            node_budget=self.node_budget or DEFAULT_NODE_BUDGET,
        )
        self.plan = list(plan.actions)

    def act(self, observation: Observation, state: NetworkState) -> int:
        return self.plan[state.subframe_index]


def baseline_agents(include_lte_first: bool = True) -> List[Agent]:
    agents: List[Agent] = [ProportionalAgent(), EqualSplitAgent(), AlternatingAgent()]
    if include_lte_first:
        agents.append(AlternatingAgent(lte_first=True))
    return agents
