import os
import tempfile

# Keep test logs out of the home directory; read when dss.utils.logger is imported
os.environ.setdefault("DSS_LOG_DIR", tempfile.mkdtemp(prefix="dss-test-logs-"))

import numpy as np
import pytest

from dss.model.network import NetworkConfig, build_network
from dss.radio.traffic import Rat, UserConfig, constant_override
from dss.scenarios.config import ScenarioConfig
from dss.scenarios.library import build_scenario


@pytest.fixture
def scenario_1() -> ScenarioConfig:
    return build_scenario(1)


@pytest.fixture
def scenario_2() -> ScenarioConfig:
    return build_scenario(2)


@pytest.fixture
def scenario_3() -> ScenarioConfig:
    return build_scenario(3)


@pytest.fixture
def scenario_4() -> ScenarioConfig:
    return build_scenario(4)


@pytest.fixture
def empty_traffic() -> ScenarioConfig:
    override = constant_override(1000.0)
    return ScenarioConfig(
        name="empty_traffic",
        users=(
            UserConfig(0, Rat.NR, arrival_period=1, packet_size=0, bits_per_prb_override=override),
            UserConfig(1, Rat.LTE, arrival_period=1, packet_size=0, bits_per_prb_override=override),
        ),
    ).validate()


@pytest.fixture
def link_budget_scenario() -> ScenarioConfig:
    """
    Two users at 100 m without capacity overrides.
    """
    return ScenarioConfig(
        name="link_budget",
        users=(
            UserConfig(0, Rat.NR, arrival_period=2, packet_size=20000),
            UserConfig(1, Rat.LTE, arrival_period=2, packet_size=20000),
        ),
    ).validate()


@pytest.fixture
def small_config() -> NetworkConfig:
    return NetworkConfig(obs_dim=6, action_count=3, window=1, hidden_size=8, state_size=4)


@pytest.fixture
def small_network(small_config):
    return build_network(small_config, seed=0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
