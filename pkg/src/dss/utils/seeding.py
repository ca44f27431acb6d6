from typing import Sequence

import numpy as np

# Evaluation streams live far away from the (iteration, episode) training streams
EVAL_STREAM_OFFSET = 10**6
TRAIN_STREAM_OFFSET = 2 * 10**6


def derive_seed(root_seed: int, *path: int) -> int:
    """
    Deterministically split a run seed into an independent child seed.

    ``derive_seed(s, i, e)`` is the seed of episode ``e`` in iteration ``i``;
    ``derive_seed(s, EVAL_STREAM_OFFSET + k)`` is evaluation seed ``k`` and
    ``derive_seed(s, TRAIN_STREAM_OFFSET + i)`` drives batch sampling in iteration ``i``.

    :param root_seed: The run seed written to the manifest.
    :type root_seed: int
    :param path: Integers identifying the child stream.
    :type path: int
    :returns: A 32-bit child seed.
    :rtype: int
    """
    entropy: Sequence[int] = [int(root_seed), *[int(p) for p in path]]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def make_rng(root_seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root_seed, *path))
