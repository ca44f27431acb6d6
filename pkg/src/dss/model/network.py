from dataclasses import dataclass
from enum import Enum
import logging
from typing import Dict, Tuple, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from dss.errors import ConfigError, DimensionError
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="model/network.log",
)

DTYPE = torch.float64

TensorLike = Union[torch.Tensor, np.ndarray]

# Returns reach the episode length (16); the value head learns a fraction of it
VALUE_SCALE = 16.0


class Activation(Enum):
    RELU = "relu"
    TANH = "tanh"
    LINEAR = "linear"
    SOFTMAX = "softmax"


class DenseLayer(nn.Module):
    """
    Fully connected layer with a fixed output activation. Weights use uniform
    fan-in/fan-out scaling (limit sqrt(6 / (fan_in + fan_out))), biases start at 0.

    :param in_features: Input width.
    :type in_features: int
    :param out_features: Output width.
    :type out_features: int
    :param activation: Output activation.
    :type activation: Activation
    """

    def __init__(self, in_features: int, out_features: int, activation: Activation):
        super().__init__()
        self.activation = activation
        self.linear = nn.Linear(in_features, out_features, dtype=DTYPE)
        nn.init.xavier_uniform_(self.linear.weight)
        nn.init.zeros_(self.linear.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = self.linear(x)
        if self.activation == Activation.RELU:
            return F.relu(z)
        if self.activation == Activation.TANH:
            return torch.tanh(z)
        if self.activation == Activation.SOFTMAX:
            return F.softmax(z, dim=-1)
        return z

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        return self.linear(x)


@dataclass(frozen=True)
class NetworkConfig:
    """
    Shape of the three learned functions.

    :param obs_dim: Flattened observation length 2J + 3JT.
    :type obs_dim: int
    :param action_count: Number of actions N.
    :type action_count: int
    :param window: Observation window T, stored in checkpoints.
    :type window: int
    :param hidden_size: Width of the single hidden layer of h, g and f.
    :type hidden_size: int
    :param state_size: Hidden state dimension.
    :type state_size: int
    """

    obs_dim: int
    action_count: int
    window: int = 10
    hidden_size: int = 64
    state_size: int = 10

    def validate(self) -> "NetworkConfig":
        for name in ("obs_dim", "window", "hidden_size", "state_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.action_count < 2:
            raise ConfigError(f"action_count must be >= 2, got {self.action_count}")
        return self


class Representation(nn.Module):
    """
    h: observation to initial hidden state in [-1, 1]^state_size.
    """

    def __init__(self, config: NetworkConfig):
        super().__init__()
        self.hidden = DenseLayer(config.obs_dim, config.hidden_size, Activation.RELU)
        self.state = DenseLayer(config.hidden_size, config.state_size, Activation.TANH)

    def forward(self, observation: torch.Tensor) -> torch.Tensor:
        return self.state(self.hidden(observation))


class Dynamics(nn.Module):
    """
    g: hidden state and one-hot action to next hidden state and predicted reward.
    """

    def __init__(self, config: NetworkConfig):
        super().__init__()
        self.action_count = config.action_count
        self.hidden = DenseLayer(
            config.state_size + config.action_count, config.hidden_size, Activation.RELU
        )
        self.state = DenseLayer(config.hidden_size, config.state_size, Activation.TANH)
        self.reward = DenseLayer(config.hidden_size, 1, Activation.LINEAR)

    def forward(
        self, state: torch.Tensor, action: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        one_hot = F.one_hot(action, self.action_count).to(DTYPE)
        x = self.hidden(torch.cat([state, one_hot], dim=-1))
        return self.state(x), self.reward(x).squeeze(-1)


class Prediction(nn.Module):
    """
    f: hidden state to policy and value. The value is the linear head times
    VALUE_SCALE.
    """

    def __init__(self, config: NetworkConfig):
        super().__init__()
        self.hidden = DenseLayer(config.state_size, config.hidden_size, Activation.RELU)
        self.policy = DenseLayer(config.hidden_size, config.action_count, Activation.SOFTMAX)
        self.value = DenseLayer(config.hidden_size, 1, Activation.LINEAR)

    def forward(self, state: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        x = self.hidden(state)
        return self.policy.logits(x), VALUE_SCALE * self.value(x).squeeze(-1)


class MuZeroNetwork(nn.Module):
    """
    The representation (h), dynamics (g) and prediction (f) functions of the
    learned model, in double precision. ``calls`` counts every invocation of
    each function so callers can prove which functions an agent used.

    Parameter order (also the checkpoint tensor order) is ``state_dict()``
    order: representation.hidden, representation.state, dynamics_net.hidden,
    dynamics_net.state, dynamics_net.reward, prediction.hidden, prediction.policy,
    prediction.value, each as weight then bias.
    """

    def __init__(self, config: NetworkConfig):
        super().__init__()
        self.config = config.validate()
        self.representation = Representation(config)
        self.dynamics_net = Dynamics(config)
        self.prediction = Prediction(config)
        self.calls: Dict[str, int] = {"represent": 0, "dynamics": 0, "predict": 0}

    def reset_call_counts(self):
        for key in self.calls:
            self.calls[key] = 0

    def _as_tensor(self, x: TensorLike) -> torch.Tensor:
        if isinstance(x, torch.Tensor):
            return x.to(DTYPE)
        return torch.as_tensor(np.asarray(x, dtype=np.float64))

    def represent(self, observation: TensorLike) -> torch.Tensor:
        """
        Encodes one observation (shape ``(obs_dim,)``) or a batch
        (shape ``(B, obs_dim)``) into hidden states.

        :raises DimensionError: If the last dimension is not obs_dim.
        """
        obs = self._as_tensor(observation)
        if obs.shape[-1] != self.config.obs_dim:
            raise DimensionError(
                f"Observation length {obs.shape[-1]} does not match obs_dim {self.config.obs_dim}"
            )
        self.calls["represent"] += 1
        return self.representation(obs)

    def dynamics(
        self, state: torch.Tensor, action: Union[int, torch.Tensor]
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Applies g to a hidden state and an action index (or batch of indices).

        :returns: Next hidden state and predicted reward.
        :rtype: Tuple[torch.Tensor, torch.Tensor]
        :raises DimensionError: On an action index outside 0..N-1.
        """
        actions = torch.as_tensor(action, dtype=torch.long)
        if actions.numel() > 0 and (
            int(actions.min()) < 0 or int(actions.max()) >= self.config.action_count
        ):
            raise DimensionError(
                f"Action index outside 0..{self.config.action_count - 1}: {actions.tolist()}"
            )
        if state.shape[-1] != self.config.state_size:
            raise DimensionError(
                f"Hidden state size {state.shape[-1]} does not match {self.config.state_size}"
            )
        self.calls["dynamics"] += 1
        return self.dynamics_net(state, actions)

    def predict_logits(self, state: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        if state.shape[-1] != self.config.state_size:
            raise DimensionError(
                f"Hidden state size {state.shape[-1]} does not match {self.config.state_size}"
            )
        self.calls["predict"] += 1
        return self.prediction(state)

    def predict(self, state: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Applies f to a hidden state.

        :returns: Policy probabilities (softmax over N) and value.
        :rtype: Tuple[torch.Tensor, torch.Tensor]
        """
        logits, value = self.predict_logits(state)
        return F.softmax(logits, dim=-1), value

    def initial_inference(self, observation: TensorLike) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        state = self.represent(observation)
        policy, value = self.predict(state)
        return state, policy, value

    def recurrent_inference(
        self, state: torch.Tensor, action: Union[int, torch.Tensor]
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        next_state, reward = self.dynamics(state, action)
        policy, value = self.predict(next_state)
        return next_state, reward, policy, value

    def snapshot(self) -> Dict[str, torch.Tensor]:
        return {k: v.detach().clone() for k, v in self.state_dict().items()}


def build_network(config: NetworkConfig, seed: int = 0) -> MuZeroNetwork:
    """
    Initializes a network from ``seed`` without touching the global torch RNG.
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        network = MuZeroNetwork(config)
    logger.debug(
        f"Built network obs_dim={config.obs_dim} N={config.action_count} "
        f"hidden={config.hidden_size} state={config.state_size} seed={seed}"
    )
    return network


def network_from_snapshot(config: NetworkConfig, snapshot: Dict[str, torch.Tensor]) -> MuZeroNetwork:
    network = MuZeroNetwork(config)
    network.load_state_dict(snapshot)
    return network
