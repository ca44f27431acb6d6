import os

import pytest
import yaml

from dss.errors import ConfigError
from dss.radio.traffic import ShareMode
from dss.scenarios.config import InterferencePattern, MbsfnPattern, ScenarioConfig
from dss.scenarios.library import build_scenario, load_scenario

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "..", "configs", "scenarios")


def test_mbsfn_pattern_repeats():
    pattern = MbsfnPattern(period=4, mbsfn_subframes=(2, 3))
    assert [pattern.is_mbsfn(p) for p in range(8)] == [False, False, True, True] * 2
    assert pattern.flags == [False, False, True, True]


def test_mbsfn_subframe_outside_period_is_rejected():
    with pytest.raises(ConfigError):
        MbsfnPattern(period=2, mbsfn_subframes=(2,)).validate()


def test_interference_pattern_phase():
    pattern = InterferencePattern(user_id=1, period=3, phase=1)
    assert [pattern.hits(p) for p in range(6)] == [False, True, False, False, True, False]


def test_scenario_dict_round_trip(scenario_4):
    data = yaml.safe_load(scenario_4.to_yaml())
    assert data["users"][0]["bits_per_prb_override"] == {"alone": 564.48, "shared": 503.04}
    assert ScenarioConfig.from_dict(data) == scenario_4


def test_content_hash_is_stable_and_content_sensitive(scenario_1):
    assert scenario_1.content_hash() == build_scenario(1).content_hash()
    assert len(scenario_1.content_hash()) == 40
    assert scenario_1.content_hash() != scenario_1.with_overrides(window=5).content_hash()


@pytest.mark.parametrize("scenario_id", [1, 2, 3, 4])
def test_shipped_scenario_files_match_the_library(scenario_id):
    path = os.path.join(CONFIG_DIR, f"scenario_{scenario_id}.yaml")
    assert load_scenario(path) == build_scenario(scenario_id)


def test_missing_users_are_rejected():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"name": "broken"})


def test_unknown_rat_is_rejected(scenario_1):
    data = scenario_1.to_dict()
    data["users"][0]["rat"] = "WIFI"
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(data)


def test_duplicate_user_ids_are_rejected(scenario_1):
    with pytest.raises(ConfigError):
        scenario_1.with_overrides(users=(scenario_1.users[0], scenario_1.users[0]))


def test_interference_on_unknown_user_is_rejected(scenario_2):
    with pytest.raises(ConfigError):
        scenario_2.with_overrides(interference=(InterferencePattern(user_id=9, period=3),))


def test_unknown_override_field_is_rejected(scenario_1):
    with pytest.raises(ConfigError):
        scenario_1.with_overrides(colour="blue")


def test_capacity_overrides_by_user(scenario_4):
    overrides = scenario_4.capacity_overrides
    assert overrides[0][ShareMode.ALONE] == pytest.approx(14112 / 25)
    assert overrides[1][ShareMode.SHARED] == 521.0
    assert scenario_4.interfered_users(0) == frozenset()
