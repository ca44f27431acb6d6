import logging
from typing import List, Optional, Tuple, Union

from dss.radio.environment import (
    Action,
    NetworkState,
    ScheduleResult,
    action_space,
    env_step,
)
from dss.radio.observation import Observation, build_observation
from dss.scenarios.config import ScenarioConfig
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="radio/simulator.log",
)


class DssEnvironment:
    """
    Stateful episode wrapper around the pure ``env_step`` used by data
    generation and evaluation. One instance per episode worker. With
    ``trace`` every subframe is written to the debug log.
    """

    def __init__(self, scenario: ScenarioConfig, seed: int = 0, trace: bool = False):
        self.scenario = scenario.validate()
        self.actions: List[Action] = action_space(
            scenario.action_count, scenario.radio.total_prbs
        )
        self.seed = seed
        self.trace = trace
        self.state = NetworkState.initial(scenario, seed)
        self.history: List[ScheduleResult] = []

    @property
    def done(self) -> bool:
        return self.state.finished

    @property
    def episode_return(self) -> float:
        return sum(result.reward for result in self.history)

    def reset(self, seed: Optional[int] = None) -> Observation:
        if seed is not None:
            self.seed = seed
        self.state = NetworkState.initial(self.scenario, self.seed)
        self.history = []
        return self.observe()

    def observe(self) -> Observation:
        return build_observation(self.state, self.scenario.window)

    def step(self, action: Union[int, Action]) -> Tuple[Observation, float, bool, ScheduleResult]:
        """
        Advances one subframe.

        :param action: Bandwidth-split action.
        :type action: Union[int, Action]
        :returns: Next observation, reward, whether the episode ended and the
            schedule details.
        :rtype: Tuple[Observation, float, bool, ScheduleResult]
        """
        self.state, reward, result = env_step(self.state, action)
        self.history.append(result)
        if self.trace:
            logger.debug(
                f"p={result.subframe_index} lte_prbs={result.lte_prbs} "
                f"served={list(result.served_bits)} reward={reward:.6f}"
            )
        return self.observe(), reward, self.done, result
