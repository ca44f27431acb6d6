from dataclasses import dataclass
import logging
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from dss.radio.environment import NetworkState, bits_per_prb, full_band_context, max_bits_per_prb
from dss.radio.traffic import Rat
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="radio/observation.log",
)


@dataclass(frozen=True)
class Observation:
    """
    Controller input for subframe p. Per-user blocks have J entries, look-ahead
    blocks are J x T with column k describing subframe p + k.

    The flattened order is nr_support, buffer_bits, mbsfn,
    predicted_bits_per_prb, predicted_arrivals, matrices row-major.
    """

    nr_support: NDArray
    buffer_bits: NDArray
    mbsfn: NDArray
    predicted_bits_per_prb: NDArray
    predicted_arrivals: NDArray

    @property
    def num_users(self) -> int:
        return int(self.nr_support.shape[0])

    @property
    def window(self) -> int:
        return int(self.mbsfn.shape[1])

    def flatten(self) -> NDArray:
        return np.concatenate(
            [
                self.nr_support,
                self.buffer_bits,
                self.mbsfn.ravel(),
                self.predicted_bits_per_prb.ravel(),
                self.predicted_arrivals.ravel(),
            ]
        ).astype(np.float64)

    def __len__(self) -> int:
        return 2 * self.num_users + 3 * self.num_users * self.window


def build_observation(state: NetworkState, window: Optional[int] = None) -> Observation:
    """
    Builds the observation of the next subframe p of ``state``.

    Buffers are read before the arrivals of p. Look-ahead columns cover
    subframes p .. p + T - 1 and only hold schedule-independent quantities:
    MBSFN flags, the bits/PRB each user would get if its RAT owned the whole
    band, and the arrival pattern. Bits are divided by the largest packet
    size, bits/PRB by the largest unfaded bits/PRB, and both clipped to 1.

    :param state: The simulator state.
    :type state: NetworkState
    :param window: [Optional] Look-ahead T, defaults to the scenario window.
    :type window: Optional[int]
    :returns: The observation.
    :rtype: Observation
    """
    scenario = state.scenario
    T = scenario.window if window is None else window
    assert T >= 1, f"Observation window must be >= 1, got {T}"
    J = scenario.num_users
    p = state.subframe_index

    packet_scale = float(scenario.max_packet_size)
    capacity_scale = max_bits_per_prb(scenario)

    nr_support = np.array([1.0 if u.rat == Rat.NR else 0.0 for u in scenario.users])
    buffer_bits = np.zeros(J)
    mbsfn = np.zeros((J, T))
    capacity = np.zeros((J, T))
    arrivals = np.zeros((J, T))

    if packet_scale > 0:
        buffer_bits = np.array(state.buffer_bits(), dtype=np.float64) / packet_scale

    for k in range(T):
        q = p + k
        is_mbsfn = scenario.mbsfn.is_mbsfn(q)
        for j, user in enumerate(scenario.users):
            if user.rat == Rat.LTE and is_mbsfn:
                mbsfn[j, k] = 1.0
            if packet_scale > 0:
                arrivals[j, k] = user.bits_arriving_at(q) / packet_scale
            if capacity_scale > 0:
                context = full_band_context(scenario, q, user.rat)
                capacity[j, k] = (
                    bits_per_prb(scenario, j, context, state.fading_gain(j, q)) / capacity_scale
                )

    return Observation(
        nr_support=nr_support,
        buffer_bits=np.clip(buffer_bits, 0.0, 1.0),
        mbsfn=mbsfn,
        predicted_bits_per_prb=np.clip(capacity, 0.0, 1.0),
        predicted_arrivals=np.clip(arrivals, 0.0, 1.0),
    )
