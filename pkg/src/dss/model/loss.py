from dataclasses import dataclass
import logging
from typing import Dict, Iterable, Tuple

import torch
import torch.nn.functional as F

from dss.errors import DimensionError, NonFiniteLossError
from dss.model.network import MuZeroNetwork
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="model/loss.log",
)


@dataclass
class TrainingBatch:
    """
    Sequences for one unrolled training step. B sequences, K unroll steps.

    :param observations: Root observations, shape (B, obs_dim).
    :type observations: torch.Tensor
    :param actions: Actions a_1..a_K fed to the dynamics function, shape (B, K).
    :type actions: torch.Tensor
    :param target_policies: Policy targets pi_0..pi_K, shape (B, K + 1, N).
    :type target_policies: torch.Tensor
    :param target_values: Value targets z_0..z_K, shape (B, K + 1).
    :type target_values: torch.Tensor
    :param target_rewards: Reward targets u_0..u_K, shape (B, K + 1); u_0 is unused.
    :type target_rewards: torch.Tensor
    """

    observations: torch.Tensor
    actions: torch.Tensor
    target_policies: torch.Tensor
    target_values: torch.Tensor
    target_rewards: torch.Tensor

    @property
    def size(self) -> int:
        return int(self.observations.shape[0])

    @property
    def unroll_steps(self) -> int:
        return int(self.actions.shape[1])

    def validate(self):
        B, K = self.size, self.unroll_steps
        expected = {
            "actions": (self.actions, (B, K)),
            "target_values": (self.target_values, (B, K + 1)),
            "target_rewards": (self.target_rewards, (B, K + 1)),
        }
        for name, (tensor, shape) in expected.items():
            if tuple(tensor.shape) != shape:
                raise DimensionError(f"{name} has shape {tuple(tensor.shape)}, expected {shape}")
        if tuple(self.target_policies.shape[:2]) != (B, K + 1):
            raise DimensionError(
                f"target_policies has shape {tuple(self.target_policies.shape)}, "
                f"expected ({B}, {K + 1}, N)"
            )


@dataclass
class LossBreakdown:
    total: float
    value: float
    policy: float
    reward: float

    def to_dict(self) -> Dict[str, float]:
        return {"total": self.total, "value": self.value, "policy": self.policy, "reward": self.reward}


def scale_gradient(x: torch.Tensor, scale: float) -> torch.Tensor:
    """
    Identity in the forward pass, multiplies the gradient by ``scale``.
    """
    return x * scale + x.detach() * (1.0 - scale)


def unroll_loss(
    network: MuZeroNetwork, batch: TrainingBatch, gradient_scale: float = 0.5
) -> Tuple[torch.Tensor, LossBreakdown]:
    """
    Unrolls g from h(o_t) for K steps and sums the per-step losses

    L = sum_k (v_k - z_k)^2 + CE(pi_k, p_k) + sum_{k>=1} (r_k - u_k)^2,

    averaged over the batch.

    :param network: The learned model.
    :type network: MuZeroNetwork
    :param batch: Training sequences.
    :type batch: TrainingBatch
    :param gradient_scale: Gradient factor applied to the hidden state at each
        unroll boundary. 1 gives the plain gradient.
    :type gradient_scale: float
    :returns: The scalar loss (with graph) and its detached components.
    :rtype: Tuple[torch.Tensor, LossBreakdown]
    :raises DimensionError: If targets and actions disagree on K or B.
    """
    batch.validate()
    state = network.represent(batch.observations)
    logits, value = network.predict_logits(state)
    value_loss = (value - batch.target_values[:, 0]) ** 2
    policy_loss = -(batch.target_policies[:, 0] * F.log_softmax(logits, dim=-1)).sum(-1)
    reward_loss = torch.zeros_like(value_loss)

    for k in range(1, batch.unroll_steps + 1):
        state, reward = network.dynamics(state, batch.actions[:, k - 1])
        state = scale_gradient(state, gradient_scale)
        logits, value = network.predict_logits(state)
        value_loss = value_loss + (value - batch.target_values[:, k]) ** 2
        policy_loss = policy_loss - (
            batch.target_policies[:, k] * F.log_softmax(logits, dim=-1)
        ).sum(-1)
        reward_loss = reward_loss + (reward - batch.target_rewards[:, k]) ** 2

    total = (value_loss + policy_loss + reward_loss).mean()
    breakdown = LossBreakdown(
        total=float(total.detach()),
        value=float(value_loss.mean().detach()),
        policy=float(policy_loss.mean().detach()),
        reward=float(reward_loss.mean().detach()),
    )
    return total, breakdown


def make_optimizer(
    parameters: Iterable[torch.Tensor],
    lr: float = 1e-4,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> torch.optim.Adam:
    return torch.optim.Adam(parameters, lr=lr, betas=betas, eps=eps)


def bptt_step(
    network: MuZeroNetwork,
    optimizer: torch.optim.Optimizer,
    batch: TrainingBatch,
    gradient_scale: float = 0.5,
    max_grad_norm: float = 5.0,
) -> LossBreakdown:
    """
    One backpropagation-through-time update: loss over the unrolled model,
    gradient-norm clipping and an Adam step.

    :raises NonFiniteLossError: If the loss is NaN or infinite. Parameters are
        left untouched in that case.
    """
    optimizer.zero_grad()
    loss, breakdown = unroll_loss(network, batch, gradient_scale)
    if not torch.isfinite(loss):
        diagnostics = breakdown.to_dict()
        diagnostics["parameter_norms"] = {
            name: float(p.detach().norm()) for name, p in network.named_parameters()
        }
        diagnostics["observations_finite"] = bool(torch.isfinite(batch.observations).all())
        raise NonFiniteLossError(f"Training loss became {float(loss)}", diagnostics)
    loss.backward()
    torch.nn.utils.clip_grad_norm_(network.parameters(), max_grad_norm)
    optimizer.step()
    return breakdown
