"""
Binary checkpoint format of the learned model.

Layout, all little-endian:

====== ======= =================================================
offset type    field
====== ======= =================================================
0      8 bytes magic ``DSSMZCKP``
8      u32     format version (currently 1)
12     u32     obs_dim
16     u32     action count N
20     u32     window T
24     u32     hidden layer width
28     u32     hidden state size
32     u32     number of tensors
36     f64[]   tensors in ``MuZeroNetwork.state_dict()`` order, row-major
====== ======= =================================================

Tensor shapes follow from the header, so only the raw values are stored.
"""

import logging
import os
import struct
from typing import Union

import numpy as np
import torch

from dss.errors import CheckpointError, ConfigError
from dss.model.network import MuZeroNetwork, NetworkConfig
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="model/checkpoint.log",
)

MAGIC = b"DSSMZCKP"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8s7I")


def save_checkpoint(path: Union[str, os.PathLike], network: MuZeroNetwork):
    config = network.config
    tensors = list(network.state_dict().values())
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        config.obs_dim,
        config.action_count,
        config.window,
        config.hidden_size,
        config.state_size,
        len(tensors),
    )
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as f:
        f.write(header)
        for tensor in tensors:
            f.write(tensor.detach().cpu().numpy().astype("<f8").tobytes(order="C"))
    logger.debug(f"Saved checkpoint {path}")


def load_checkpoint(path: Union[str, os.PathLike]) -> MuZeroNetwork:
    """
    Reads a checkpoint written by ``save_checkpoint``.

    :param path: Checkpoint file.
    :type path: Union[str, os.PathLike]
    :returns: The restored network.
    :rtype: MuZeroNetwork
    :raises CheckpointError: If the file is missing, has a bad magic or
        version, or does not hold exactly the tensors its header announces.
    """
    if not os.path.isfile(path):
        raise CheckpointError(f"Checkpoint {path} does not exist")
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER.size:
        raise CheckpointError(
            f"Checkpoint {path} is too short for a header, expected magic {MAGIC!r}"
        )
    magic, version, obs_dim, action_count, window, hidden, state, num_tensors = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"Checkpoint {path} has magic {magic!r}, expected magic {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"Checkpoint {path} has format version {version}, expected {FORMAT_VERSION}"
        )
    config = NetworkConfig(
        obs_dim=obs_dim,
        action_count=action_count,
        window=window,
        hidden_size=hidden,
        state_size=state,
    )
    try:
        network = MuZeroNetwork(config)
    except ConfigError as e:
        raise CheckpointError(f"Checkpoint {path} has an invalid header: {e}") from e
    reference = network.state_dict()
    if num_tensors != len(reference):
        raise CheckpointError(
            f"Checkpoint {path} holds {num_tensors} tensors, expected {len(reference)}"
        )
    expected_values = sum(t.numel() for t in reference.values())
    if (len(data) - _HEADER.size) % 8 != 0:
        raise CheckpointError(f"Checkpoint {path} is truncated inside a value")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if values.size != expected_values:
        raise CheckpointError(
            f"Checkpoint {path} holds {values.size} values, expected {expected_values}"
        )
    restored = {}
    offset = 0
    for name, tensor in reference.items():
        count = tensor.numel()
        restored[name] = torch.from_numpy(
            values[offset : offset + count].astype(np.float64).reshape(tensor.shape)
        )
        offset += count
    network.load_state_dict(restored)
    logger.debug(f"Loaded checkpoint {path}")
    return network
