from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
import logging
import time
from typing import Callable, Dict, List, Optional

import numpy as np
import torch
from tqdm import tqdm

from dss.errors import ConfigError, NonFiniteLossError
from dss.eval.agents import MuZeroAgent
from dss.eval.evaluator import evaluate_agent
from dss.model.loss import bptt_step, make_optimizer
from dss.model.network import MuZeroNetwork, NetworkConfig, build_network, network_from_snapshot
from dss.planning.mcts import SearchConfig, SearchResult, run_search, sample_action
from dss.radio.simulator import DssEnvironment
from dss.scenarios.config import ScenarioConfig
from dss.scenarios.randomization import RandomizationSpec, sample_environment
from dss.training.replay import ReplayBuffer, Trajectory, sample_batch
from dss.utils.logger import getLogger
from dss.utils.seeding import EVAL_STREAM_OFFSET, TRAIN_STREAM_OFFSET, derive_seed, make_rng


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="training/pipeline.log",
)

SearchFn = Callable[[np.ndarray], SearchResult]


@dataclass(frozen=True)
class TrainHyperparams:
    """
    :param iterations: Training iterations N_iter.
    :type iterations: int
    :param episodes_per_iteration: Generated episodes N_episode per iteration.
    :type episodes_per_iteration: int
    :param timesteps: Subframes N_timestep per episode.
    :type timesteps: int
    :param train_steps: BPTT updates N_step per iteration.
    :type train_steps: int
    :param batch_size: Sequences per update.
    :type batch_size: int
    :param unroll_steps: Dynamics unroll length N_unroll.
    :type unroll_steps: int
    :param td_steps: Rewards N_td summed into a value target.
    :type td_steps: int
    :param discount: Discount gamma of the value targets.
    :type discount: float
    :param learning_rate: Adam learning rate.
    :type learning_rate: float
    :param window: Observation look-ahead T.
    :type window: int
    :param max_grad_norm: Gradient-norm clip.
    :type max_grad_norm: float
    :param gradient_scale: Gradient factor at every dynamics unroll boundary.
    :type gradient_scale: float
    :param replay_capacity: Episodes kept in the replay buffer.
    :type replay_capacity: int
    :param num_workers: Processes generating episodes, 1 runs in-process.
    :type num_workers: int
    :param eval_episodes: Greedy evaluation episodes after every iteration.
    :type eval_episodes: int
    :param hidden_size: Hidden layer width of h, g and f.
    :type hidden_size: int
    :param state_size: Hidden state dimension.
    :type state_size: int
    """

    iterations: int = 15
    episodes_per_iteration: int = 100
    timesteps: int = 16
    train_steps: int = 1000
    batch_size: int = 32
    unroll_steps: int = 3
    td_steps: int = 16
    discount: float = 0.99
    learning_rate: float = 1e-4
    window: int = 10
    max_grad_norm: float = 5.0
    gradient_scale: float = 0.5
    replay_capacity: int = 500
    num_workers: int = 1
    eval_episodes: int = 1
    hidden_size: int = 64
    state_size: int = 10

    def validate(self) -> "TrainHyperparams":
        for f in fields(self):
            value = getattr(self, f.name)
            minimum = 0 if f.name in ("iterations", "train_steps") else 1
            if f.name in ("discount", "learning_rate", "max_grad_norm", "gradient_scale"):
                if not value > 0:
                    raise ConfigError(f"{f.name} must be > 0, got {value}")
            elif value < minimum:
                raise ConfigError(f"{f.name} must be >= {minimum}, got {value}")
        if self.td_steps < self.unroll_steps:
            raise ConfigError(
                f"td_steps ({self.td_steps}) must be >= unroll_steps ({self.unroll_steps})"
            )
        if self.discount > 1 or self.gradient_scale > 1:
            raise ConfigError("discount and gradient_scale must not exceed 1")
        return self


@dataclass
class IterationReport:
    iteration: int
    eval_score: float
    eval_scores: List[float]
    eval_seeds: List[int]
    train_loss: float
    episodes: int
    buffer_size: int
    mean_episode_return: float
    wall_ms: float
    loss_components: Dict[str, float] = field(default_factory=dict)


def generate_episode(
    model: MuZeroNetwork,
    env: DssEnvironment,
    config: SearchConfig,
    rng: np.random.Generator,
    search_fn: Optional[SearchFn] = None,
) -> Trajectory:
    """
    Plays one episode, searching from every observation and sampling the
    action from the visit counts.

    :param model: Learned model searched over.
    :type model: MuZeroNetwork
    :param env: Fresh environment.
    :type env: DssEnvironment
    :param config: Search constants, including the sampling temperature.
    :type config: SearchConfig
    :param rng: Generator for root noise and action sampling.
    :type rng: np.random.Generator
    :param search_fn: [Optional] Replaces the tree search, for scripted runs.
    :type search_fn: Optional[SearchFn]
    :returns: The recorded episode.
    :rtype: Trajectory
    """
    if search_fn is None:

        def search_fn(observation: np.ndarray) -> SearchResult:
            return run_search(model, observation, config, rng)

    observation = env.reset()
    observations, actions, rewards, policies, values = [], [], [], [], []
    while not env.done:
        flat = observation.flatten()
        result = search_fn(flat)
        action = sample_action(result.policy, config.temperature, rng)
        observations.append(flat)
        policies.append(result.policy)
        values.append(result.root_value)
        observation, reward, _, _ = env.step(action)
        actions.append(action)
        rewards.append(reward)
    return Trajectory(
        observations=np.array(observations),
        actions=tuple(actions),
        rewards=tuple(rewards),
        policies=np.array(policies),
        root_values=tuple(values),
        scenario=env.scenario.name,
        seed=env.seed,
    )


def play_training_episode(
    network: MuZeroNetwork, spec: RandomizationSpec, config: SearchConfig, seed: int
) -> Trajectory:
    rng = np.random.default_rng(seed)
    scenario = sample_environment(spec, rng)
    return generate_episode(network, DssEnvironment(scenario, seed), config, rng)


def _episode_job(
    network_config: NetworkConfig,
    snapshot: Dict[str, torch.Tensor],
    spec: RandomizationSpec,
    config: SearchConfig,
    seed: int,
) -> Trajectory:
    network = network_from_snapshot(network_config, snapshot)
    return play_training_episode(network, spec, config, seed)


class Trainer:
    """
    Alternates episode generation with tree search over sampled environments,
    BPTT updates from the replay buffer, and a greedy evaluation on the
    pinned scenario.
    """

    def __init__(
        self,
        scenario: ScenarioConfig,
        hp: TrainHyperparams,
        search: SearchConfig,
        randomization: Optional[RandomizationSpec] = None,
        seed: int = 0,
        network: Optional[MuZeroNetwork] = None,
    ):
        self.hp = hp.validate()
        self.search = search.validate()
        self.seed = seed
        self.scenario = scenario.with_overrides(episode_length=hp.timesteps, window=hp.window)
        if randomization is None:
            randomization = RandomizationSpec(base=self.scenario, seed=seed)
        self.randomization = replace(randomization, base=self.scenario).validate()
        self.network_config = NetworkConfig(
            obs_dim=self.scenario.observation_size,
            action_count=self.scenario.action_count,
            window=hp.window,
            hidden_size=hp.hidden_size,
            state_size=hp.state_size,
        ).validate()
        if network is not None and network.config != self.network_config:
            raise ConfigError(
                f"Network shape {network.config} does not match the scenario {self.network_config}"
            )
        self.network = network or build_network(self.network_config, seed)
        self.optimizer = make_optimizer(self.network.parameters(), lr=hp.learning_rate)
        self.buffer = ReplayBuffer(hp.replay_capacity, hp.timesteps)
        self.reports: List[IterationReport] = []

    def eval_seeds(self) -> List[int]:
        return [derive_seed(self.seed, EVAL_STREAM_OFFSET + k) for k in range(self.hp.eval_episodes)]

    def generate_episodes(self, iteration: int) -> List[Trajectory]:
        seeds = [
            derive_seed(self.seed, iteration, e) for e in range(self.hp.episodes_per_iteration)
        ]
        desc = f"Iteration {iteration}: episodes"
        if self.hp.num_workers <= 1:
            return [
                play_training_episode(self.network, self.randomization, self.search, s)
                for s in tqdm(seeds, desc=desc, leave=False)
            ]
        snapshot = self.network.snapshot()
        with ProcessPoolExecutor(max_workers=self.hp.num_workers) as executor:
            futures = [
                executor.submit(
                    _episode_job, self.network_config, snapshot, self.randomization, self.search, s
                )
                for s in seeds
            ]
            return [f.result() for f in tqdm(futures, desc=desc, leave=False)]

    def train_steps(self, iteration: int) -> List[Dict[str, float]]:
        rng = make_rng(self.seed, TRAIN_STREAM_OFFSET + iteration)
        breakdowns = []
        for step in tqdm(range(self.hp.train_steps), desc=f"Iteration {iteration}: training", leave=False):
            batch = sample_batch(
                self.buffer,
                self.hp.batch_size,
                self.hp.unroll_steps,
                rng,
                discount=self.hp.discount,
                td_steps=self.hp.td_steps,
            )
            try:
                breakdown = bptt_step(
                    self.network,
                    self.optimizer,
                    batch,
                    gradient_scale=self.hp.gradient_scale,
                    max_grad_norm=self.hp.max_grad_norm,
                )
            except NonFiniteLossError as e:
                e.diagnostics.update({"iteration": iteration, "step": step})
                raise
            breakdowns.append(breakdown.to_dict())
        return breakdowns

    def run_iteration(self, iteration: int) -> IterationReport:
        """
        One outer iteration: generate, store, train, evaluate.

        :param iteration: Zero-based iteration index.
        :type iteration: int
        :returns: The iteration report.
        :rtype: IterationReport
        :raises NonFiniteLossError: If training diverges.
        """
        start = time.perf_counter()
        trajectories = self.generate_episodes(iteration)
        self.buffer.extend(trajectories)
        breakdowns = self.train_steps(iteration)

        summary = evaluate_agent(MuZeroAgent(self.network), self.scenario, self.eval_seeds())
        components = {}
        if breakdowns:
            components = {
                key: float(np.mean([b[key] for b in breakdowns])) for key in breakdowns[0]
            }
        report = IterationReport(
            iteration=iteration,
            eval_score=summary.median,
            eval_scores=list(summary.scores),
            eval_seeds=list(summary.seeds),
            train_loss=components.get("total", float("nan")),
            episodes=len(trajectories),
            buffer_size=len(self.buffer),
            mean_episode_return=float(np.mean([t.episode_return for t in trajectories]))
            if trajectories
            else 0.0,
            wall_ms=(time.perf_counter() - start) * 1000.0,
            loss_components=components,
        )
        self.reports.append(report)
        logger.info(
            f"Iteration {iteration}: eval {report.eval_score:.4f}, loss {report.train_loss:.4f}, "
            f"buffer {report.buffer_size}, {report.wall_ms:.0f} ms",
            extra={"iteration": iteration, "eval_score": report.eval_score, "train_loss": report.train_loss},
        )
        return report

    def train(
        self,
        iterations: Optional[int] = None,
        on_iteration: Optional[Callable[[IterationReport, "Trainer"], None]] = None,
    ) -> List[IterationReport]:
        iterations = self.hp.iterations if iterations is None else iterations
        for i in range(iterations):
            report = self.run_iteration(i)
            if on_iteration is not None:
                on_iteration(report, self)
        return self.reports


def train_iteration(
    trainer: Trainer, iteration: Optional[int] = None
) -> IterationReport:
    """
    Runs the next (or the given) iteration of ``trainer``.
    """
    return trainer.run_iteration(len(trainer.reports) if iteration is None else iteration)
