import copy

import numpy as np
import torch

from dss.model.gradient_check import check_gradients, clear_relu_kinks, gradient_check, relative_error
from dss.model.loss import TrainingBatch, unroll_loss
from dss.model.network import Activation, DenseLayer


def fixed_batch(rng) -> TrainingBatch:
    policies = rng.random((3, 3, 3))
    return TrainingBatch(
        observations=torch.as_tensor(rng.random((3, 6))),
        actions=torch.as_tensor(rng.integers(0, 3, size=(3, 2))),
        target_policies=torch.as_tensor(policies / policies.sum(-1, keepdims=True)),
        target_values=torch.as_tensor(rng.random((3, 3))),
        target_rewards=torch.as_tensor(rng.random((3, 3))),
    )


def test_relative_error_floor():
    assert relative_error(1.0, 1.0) == 0.0
    assert relative_error(0.0, 1e-9) == 1e-9 / 1e-4
    assert relative_error(2.0, 1.0) == 0.5


def test_single_linear_layer_is_exact():
    torch.manual_seed(0)
    layer = DenseLayer(4, 2, Activation.LINEAR)
    x = torch.as_tensor(np.random.default_rng(0).random((5, 4)))

    def loss_fn():
        return (layer(x) ** 2).sum()

    assert check_gradients(loss_fn, list(layer.parameters())) < 1e-7


def test_full_unroll_matches_finite_differences(small_network, rng):
    network = copy.deepcopy(small_network)
    assert gradient_check(network, fixed_batch(rng), samples_per_tensor=6) < 1e-4


def test_kinks_are_cleared(small_config, small_network, rng):
    network = copy.deepcopy(small_network)
    with torch.no_grad():
        for parameter in network.parameters():
            parameter.zero_()
    batch = fixed_batch(rng)

    def loss_fn():
        return unroll_loss(network, batch, gradient_scale=1.0)[0]

    # every ReLU unit sits on its kink when all weights are zero
    assert clear_relu_kinks(network, loss_fn) == 3 * small_config.hidden_size
    assert clear_relu_kinks(network, loss_fn) == 0
