import logging
import os
from typing import Callable, Dict, Optional, Union

from dss.errors import ConfigError
from dss.radio.traffic import Rat, ShareMode, UserConfig, constant_override
from dss.scenarios.config import InterferencePattern, MbsfnPattern, ScenarioConfig
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="scenarios/library.log",
)

# 1000 bits/PRB/subframe, i.e. about 5.55 bits/s/Hz over 180 kHz and 1 ms
DEFAULT_BITS_PER_PRB = 1000.0

# Full-band transport blocks of the time-multiplexing study, over 25 PRBs
NR_ALONE_TBS = 14112
NR_SHARED_TBS = 12576
LTE_BITS_PER_PRB = 521.0

SCENARIO_ACTION_VARIANTS: Dict[int, tuple] = {1: (3,), 2: (2, 3), 3: (3,), 4: (3, 4)}


def _scenario_1() -> ScenarioConfig:
    # LTE is unschedulable in the second half of every 4-subframe period
    override = constant_override(DEFAULT_BITS_PER_PRB)
    return ScenarioConfig(
        name="scenario_1",
        users=(
            UserConfig(0, Rat.NR, arrival_period=4, packet_size=45000, bits_per_prb_override=override),
            UserConfig(1, Rat.LTE, arrival_period=4, packet_size=15000, bits_per_prb_override=override),
        ),
        mbsfn=MbsfnPattern(period=4, mbsfn_subframes=(2, 3)),
        action_count=3,
    )


def _scenario_2() -> ScenarioConfig:
    override = constant_override(DEFAULT_BITS_PER_PRB)
    common = dict(arrival_period=2, step_delay=2, step_weight=2.0, bits_per_prb_override=override)
    return ScenarioConfig(
        name="scenario_2",
        users=(
            UserConfig(0, Rat.NR, packet_size=14000, **common),
            UserConfig(1, Rat.LTE, packet_size=8000, **common),
        ),
        interference=(InterferencePattern(user_id=1, period=3, phase=0),),
        action_count=2,
    )


def _scenario_3() -> ScenarioConfig:
    override = constant_override(DEFAULT_BITS_PER_PRB)
    common = dict(arrival_period=1, first_arrival=1, arrival_count=1, bits_per_prb_override=override)
    return ScenarioConfig(
        name="scenario_3",
        users=(
            UserConfig(0, Rat.NR, packet_size=90000, step_delay=5, **common),
            UserConfig(1, Rat.LTE, packet_size=90000, step_delay=10, **common),
        ),
        action_count=3,
    )


def _scenario_4() -> ScenarioConfig:
    prbs = 25
    nr_override = {
        ShareMode.ALONE: NR_ALONE_TBS / prbs,
        ShareMode.SHARED: NR_SHARED_TBS / prbs,
    }
    common = dict(arrival_period=2, step_delay=2, step_weight=5.0)
    return ScenarioConfig(
        name="scenario_4",
        users=(
            UserConfig(0, Rat.NR, packet_size=14000, bits_per_prb_override=nr_override, **common),
            UserConfig(
                1,
                Rat.LTE,
                packet_size=10000,
                bits_per_prb_override=constant_override(LTE_BITS_PER_PRB),
                **common,
            ),
        ),
        action_count=3,
    )


_BUILDERS: Dict[int, Callable[[], ScenarioConfig]] = {
    1: _scenario_1,
    2: _scenario_2,
    3: _scenario_3,
    4: _scenario_4,
}


def build_scenario(scenario_id: int, action_count: Optional[int] = None) -> ScenarioConfig:
    """
    Builds one of the four pinned reproduction scenarios.

    1. MBSFN: LTE cannot be scheduled in subframes 2 and 3 of every 4.
    2. Interference: the LTE user loses every third subframe.
    3. Priorities: one urgent NR packet and one relaxed LTE packet at subframe 1.
    4. Time multiplexing: NR gains two data symbols when it owns the whole band.

    :param scenario_id: Scenario number, 1 to 4.
    :type scenario_id: int
    :param action_count: [Optional] Size N of the action set, defaults to the
        scenario's first variant.
    :type action_count: Optional[int]
    :returns: The validated scenario.
    :rtype: ScenarioConfig
    :raises ConfigError: On an unknown scenario id.
    """
    if scenario_id not in _BUILDERS:
        raise ConfigError(
            f"Unknown scenario id {scenario_id}. Available ids {sorted(_BUILDERS)}"
        )
    scenario = _BUILDERS[scenario_id]()
    if action_count is not None:
        if action_count not in SCENARIO_ACTION_VARIANTS[scenario_id]:
            logger.warning(
                f"N={action_count} is not one of the studied variants "
                f"{SCENARIO_ACTION_VARIANTS[scenario_id]} of scenario {scenario_id}"
            )
        scenario = scenario.with_overrides(action_count=action_count)
    return scenario.validate()


def load_scenario(reference: Union[int, str], action_count: Optional[int] = None) -> ScenarioConfig:
    """
    Resolves a scenario id ("1".."4") or a scenario YAML file.
    """
    if isinstance(reference, int) or str(reference).isdigit():
        return build_scenario(int(reference), action_count)
    if not os.path.isfile(str(reference)):
        raise ConfigError(f"Scenario {reference} is neither an id nor an existing file")
    scenario = ScenarioConfig.from_yaml(str(reference))
    if action_count is not None:
        scenario = scenario.with_overrides(action_count=action_count)
    return scenario
