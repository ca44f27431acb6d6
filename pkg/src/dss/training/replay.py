from collections import deque
from dataclasses import dataclass
import logging
from typing import Deque, Dict, List, Tuple

import numpy as np
from numpy.typing import NDArray
import torch

from dss.errors import EmptyReplayError
from dss.model.loss import TrainingBatch
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="training/replay.log",
)


@dataclass(frozen=True)
class Trajectory:
    """
    One generated episode, zero-based: ``actions[p]`` was taken after
    observing ``observations[p]`` and ``rewards[p]`` was observed after it.

    :param observations: Flattened observations, shape (L, obs_dim).
    :type observations: NDArray
    :param actions: Action indices, length L.
    :type actions: Tuple[int, ...]
    :param rewards: Environment rewards u, length L.
    :type rewards: Tuple[float, ...]
    :param policies: Search policies pi, shape (L, N).
    :type policies: NDArray
    :param root_values: Root values of the searches, length L.
    :type root_values: Tuple[float, ...]
    :param scenario: Name of the scenario the episode ran on.
    :type scenario: str
    :param seed: Episode seed.
    :type seed: int
    """

    observations: NDArray
    actions: Tuple[int, ...]
    rewards: Tuple[float, ...]
    policies: NDArray
    root_values: Tuple[float, ...]
    scenario: str = ""
    seed: int = 0

    def __post_init__(self):
        L = len(self.actions)
        assert self.observations.shape[0] == L, (
            f"Got {self.observations.shape[0]} observations for {L} actions"
        )
        assert len(self.rewards) == L and self.policies.shape[0] == L, (
            f"Rewards and policies must have {L} entries"
        )
        for reward in self.rewards:
            assert 0.0 < reward <= 1.0, f"Rewards must lie in (0, 1], got {reward}"
        self.observations.setflags(write=False)
        self.policies.setflags(write=False)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def action_count(self) -> int:
        return int(self.policies.shape[1])

    @property
    def episode_return(self) -> float:
        return float(sum(self.rewards))


def compute_value_target(trajectory: Trajectory, t: int, discount: float, td_steps: int) -> float:
    """
    Discounted sum of the next min(N_td, L - t) rewards from t, without
    bootstrapping. Positions past the episode end have target 0.

    :param trajectory: The episode.
    :type trajectory: Trajectory
    :param t: Start position.
    :type t: int
    :param discount: Discount gamma.
    :type discount: float
    :param td_steps: Number of TD steps N_td.
    :type td_steps: int
    :returns: z_t.
    :rtype: float
    """
    horizon = min(td_steps, len(trajectory) - t)
    value = 0.0
    for k in range(max(horizon, 0)):
        value += discount**k * trajectory.rewards[t + k]
    return value


def padded_steps(t: int, unroll_steps: int, length: int) -> int:
    return max(0, t + unroll_steps - length)


class ReplayBuffer:
    """
    The most recent ``capacity`` complete episodes, sampled uniformly.
    """

    def __init__(self, capacity: int = 500, episode_length: int = 16):
        assert capacity >= 1, f"Replay capacity must be >= 1, got {capacity}"
        self.capacity = capacity
        self.episode_length = episode_length
        self.trajectories: Deque[Trajectory] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.trajectories)

    def append(self, trajectory: Trajectory):
        assert len(trajectory) == self.episode_length, (
            f"Only complete episodes of {self.episode_length} subframes are stored, "
            f"got {len(trajectory)}"
        )
        self.trajectories.append(trajectory)

    def extend(self, trajectories: List[Trajectory]):
        for trajectory in trajectories:
            self.append(trajectory)

    def sample_position(self, rng: np.random.Generator) -> Tuple[int, int]:
        """
        Uniform (trajectory index, start position) pair.
        """
        if not self.trajectories:
            raise EmptyReplayError("Cannot sample from an empty replay buffer")
        index = int(rng.integers(len(self.trajectories)))
        t = int(rng.integers(len(self.trajectories[index])))
        return index, t

    def stats(self) -> Dict[str, float]:
        returns = [t.episode_return for t in self.trajectories]
        return {
            "episodes": len(returns),
            "mean_return": float(np.mean(returns)) if returns else 0.0,
        }


def make_targets(
    trajectory: Trajectory,
    t: int,
    unroll_steps: int,
    discount: float,
    td_steps: int,
    rng: np.random.Generator,
) -> Tuple[List[int], NDArray, NDArray, NDArray]:
    """
    Actions and targets of one sequence starting at t.

    Step k (1..K) feeds ``actions[t+k-1]`` and targets ``rewards[t+k-1]``;
    policy and value targets of step k sit at ``t+k``. Past the episode end
    the action is uniform random, u = 1, z = 0 and pi is uniform.

    :returns: Actions (K), policy targets (K+1, N), value targets (K+1) and
        reward targets (K+1, first entry 0).
    :rtype: Tuple[List[int], NDArray, NDArray, NDArray]
    """
    L = len(trajectory)
    N = trajectory.action_count
    actions: List[int] = []
    policies = np.zeros((unroll_steps + 1, N))
    values = np.zeros(unroll_steps + 1)
    rewards = np.zeros(unroll_steps + 1)
    for k in range(unroll_steps + 1):
        index = t + k
        if index < L:
            policies[k] = trajectory.policies[index]
            values[k] = compute_value_target(trajectory, index, discount, td_steps)
        else:
            policies[k] = np.full(N, 1.0 / N)
        if k == 0:
            continue
        previous = t + k - 1
        if previous < L:
            actions.append(int(trajectory.actions[previous]))
            rewards[k] = trajectory.rewards[previous]
        else:
            actions.append(int(rng.integers(N)))
            rewards[k] = 1.0
    return actions, policies, values, rewards


def sample_batch(
    buffer: ReplayBuffer,
    batch_size: int,
    unroll_steps: int,
    rng: np.random.Generator,
    discount: float = 0.99,
    td_steps: int = 16,
) -> TrainingBatch:
    """
    Samples ``batch_size`` uniform (trajectory, start) sequences.

    :raises EmptyReplayError: If the buffer is empty.
    """
    observations, actions, policies, values, rewards = [], [], [], [], []
    for _ in range(batch_size):
        index, t = buffer.sample_position(rng)
        trajectory = buffer.trajectories[index]
        a, pi, z, u = make_targets(trajectory, t, unroll_steps, discount, td_steps, rng)
        observations.append(trajectory.observations[t])
        actions.append(a)
        policies.append(pi)
        values.append(z)
        rewards.append(u)
    return TrainingBatch(
        observations=torch.as_tensor(np.array(observations), dtype=torch.float64),
        actions=torch.as_tensor(np.array(actions, dtype=np.int64).reshape(batch_size, unroll_steps)),
        target_policies=torch.as_tensor(np.array(policies), dtype=torch.float64),
        target_values=torch.as_tensor(np.array(values), dtype=torch.float64),
        target_rewards=torch.as_tensor(np.array(rewards), dtype=torch.float64),
    )
