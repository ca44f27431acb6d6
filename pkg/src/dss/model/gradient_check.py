import logging
from typing import Callable, Dict, List, Optional

import numpy as np
import torch

from dss.model.loss import TrainingBatch, unroll_loss
from dss.model.network import Activation, DenseLayer, MuZeroNetwork
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="model/gradient_check.log",
)


def relative_error(analytic: float, numeric: float, floor: float = 1e-4) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def check_gradients(
    loss_fn: Callable[[], torch.Tensor],
    parameters: List[torch.Tensor],
    samples_per_tensor: int = 8,
    step: float = 1e-5,
    rng: Optional[np.random.Generator] = None,
    floor: float = 1e-4,
) -> float:
    """
    Compares autograd gradients of ``loss_fn`` with central finite differences.

    Every tensor contributes ``samples_per_tensor`` entries (all entries when
    it is smaller), so each layer is covered.

    :param loss_fn: Closure recomputing the scalar loss from the parameters.
    :type loss_fn: Callable[[], torch.Tensor]
    :param parameters: Leaf tensors to check.
    :type parameters: List[torch.Tensor]
    :param samples_per_tensor: Entries checked per tensor.
    :type samples_per_tensor: int
    :param step: Finite difference step h.
    :type step: float
    :param rng: [Optional] Generator choosing the sampled entries.
    :type rng: Optional[np.random.Generator]
    :param floor: Lower bound on the relative error denominator.
    :type floor: float
    :returns: The largest relative error over the sampled entries.
    :rtype: float
    """
    rng = np.random.default_rng(0) if rng is None else rng
    analytic = torch.autograd.grad(loss_fn(), parameters)
    worst = 0.0
    with torch.no_grad():
        for parameter, gradient in zip(parameters, analytic):
            flat = parameter.view(-1)
            size = flat.numel()
            if size <= samples_per_tensor:
                indices = np.arange(size)
            else:
                indices = rng.choice(size, size=samples_per_tensor, replace=False)
            for i in indices:
                original = float(flat[i])
                flat[i] = original + step
                loss_plus = float(loss_fn())
                flat[i] = original - step
                loss_minus = float(loss_fn())
                flat[i] = original
                numeric = (loss_plus - loss_minus) / (2.0 * step)
                error = relative_error(float(gradient.view(-1)[i]), numeric, floor)
                worst = max(worst, error)
    return worst


def clear_relu_kinks(
    network: MuZeroNetwork,
    loss_fn: Callable[[], torch.Tensor],
    margin: float = 1e-3,
    max_passes: int = 20,
) -> int:
    """
    Nudges ReLU biases until no pre-activation seen by ``loss_fn`` lies within
    ``margin`` of zero, where finite differences straddle the kink.

    :returns: Number of units moved.
    :rtype: int
    """
    relu_layers = [
        module
        for module in network.modules()
        if isinstance(module, DenseLayer) and module.activation == Activation.RELU
    ]
    moved = 0
    for _ in range(max_passes):
        closest: Dict[int, torch.Tensor] = {}
        handles = []
        for index, layer in enumerate(relu_layers):

            def record(_module, _inputs, output, index=index):
                distance = output.detach().abs().reshape(-1, output.shape[-1]).min(dim=0).values
                previous = closest.get(index)
                closest[index] = distance if previous is None else torch.minimum(previous, distance)

            handles.append(layer.linear.register_forward_hook(record))
        with torch.no_grad():
            loss_fn()
        for handle in handles:
            handle.remove()

        changed = 0
        with torch.no_grad():
            for index, layer in enumerate(relu_layers):
                near = closest.get(index)
                if near is None:
                    continue
                mask = near < margin
                if mask.any():
                    layer.linear.bias[mask] += 2.0 * margin
                    changed += int(mask.sum())
        moved += changed
        if changed == 0:
            return moved
    logger.warning(f"ReLU kinks remain after {max_passes} passes, gradient check may be noisy")
    return moved


def gradient_check(
    network: MuZeroNetwork,
    batch: TrainingBatch,
    samples_per_tensor: int = 8,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """
    Checks the full h, g, f unroll against finite differences.

    The loss is taken with gradient scale 1 since the boundary scaling changes
    the backward pass only. The network is modified in place by the kink
    clearing, so pass a copy when the weights matter.

    :returns: Max relative error over sampled parameters of every layer.
    :rtype: float
    """

    def loss_fn() -> torch.Tensor:
        return unroll_loss(network, batch, gradient_scale=1.0)[0]

    moved = clear_relu_kinks(network, loss_fn)
    worst = check_gradients(
        loss_fn,
        list(network.parameters()),
        samples_per_tensor=samples_per_tensor,
        step=step,
        rng=np.random.default_rng(seed),
    )
    logger.info(f"Gradient check: max relative error {worst:.3e} ({moved} ReLU biases nudged)")
    return worst
