from dataclasses import dataclass, field
import logging
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from dss.eval.agents import Agent
from dss.radio.simulator import DssEnvironment
from dss.scenarios.config import ScenarioConfig
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="eval/evaluator.log",
)

PERFECT_SCORE_PER_SUBFRAME = 1.0


@dataclass
class EpisodeResult:
    agent: str
    scenario: str
    seed: int
    actions: List[int]
    rewards: List[float]

    @property
    def score(self) -> float:
        return float(sum(self.rewards))


@dataclass
class EvaluationSummary:
    """
    Scores of one agent on one scenario over several seeds.
    """

    agent: str
    scenario: str
    seeds: List[int]
    scores: List[float]
    episodes: List[EpisodeResult] = field(default_factory=list, repr=False)

    @property
    def median(self) -> float:
        return float(np.median(self.scores))

    @property
    def minimum(self) -> float:
        return float(np.min(self.scores))

    @property
    def mean(self) -> float:
        return float(np.mean(self.scores))

    def to_rows(self) -> List[Dict]:
        return [
            {"agent": self.agent, "scenario": self.scenario, "seed": seed, "score": score}
            for seed, score in zip(self.seeds, self.scores)
        ]


def run_episode(agent: Agent, scenario: ScenarioConfig, seed: int = 0) -> EpisodeResult:
    """
    Plays one full episode of ``scenario`` with ``agent``.

    :param agent: The controller.
    :type agent: Agent
    :param scenario: The scenario.
    :type scenario: ScenarioConfig
    :param seed: Episode seed.
    :type seed: int
    :returns: Actions and rewards of every subframe.
    :rtype: EpisodeResult
    """
    env = DssEnvironment(scenario, seed)
    observation = env.reset()
    agent.reset(env.state)
    actions: List[int] = []
    rewards: List[float] = []
    while not env.done:
        action = agent.act(observation, env.state)
        observation, reward, _, _ = env.step(action)
        actions.append(action)
        rewards.append(reward)
    return EpisodeResult(agent.name, scenario.name, seed, actions, rewards)


def evaluate_agent(
    agent: Agent, scenario: ScenarioConfig, seeds: Sequence[int], progress: bool = False
) -> EvaluationSummary:
    """
    Runs one episode per seed and collects the scores.

    :returns: Per-seed scores with median and minimum.
    :rtype: EvaluationSummary
    """
    episodes = [
        run_episode(agent, scenario, seed)
        for seed in tqdm(seeds, desc=f"Evaluating {agent.name}", disable=not progress)
    ]
    summary = EvaluationSummary(
        agent=agent.name,
        scenario=scenario.name,
        seeds=list(seeds),
        scores=[episode.score for episode in episodes],
        episodes=episodes,
    )
    logger.info(
        f"{agent.name} on {scenario.name}: median {summary.median:.6f}, "
        f"min {summary.minimum:.6f} over {len(seeds)} seeds"
    )
    return summary


def compare_agents(
    agents: Sequence[Agent], scenario: ScenarioConfig, seeds: Sequence[int], progress: bool = False
) -> pd.DataFrame:
    """
    Evaluates every agent on the same seeds.

    :returns: One row per (agent, scenario, seed) with the episode score.
    :rtype: pd.DataFrame
    """
    rows: List[Dict] = []
    for agent in agents:
        rows.extend(evaluate_agent(agent, scenario, seeds, progress).to_rows())
    return pd.DataFrame(rows, columns=["agent", "scenario", "seed", "score"])


def perfect_score(scenario: ScenarioConfig) -> float:
    return PERFECT_SCORE_PER_SUBFRAME * scenario.episode_length
