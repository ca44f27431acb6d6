import pytest

from dss.errors import ConfigError
from dss.radio.traffic import Rat
from dss.scenarios.library import SCENARIO_ACTION_VARIANTS, build_scenario, load_scenario


def test_scenario_1_packets():
    scenario = build_scenario(1)
    assert [u.packet_size for u in scenario.users] == [45000, 15000]
    assert scenario.users[1].rat == Rat.LTE
    assert scenario.mbsfn.mbsfn_subframes == (2, 3)


def test_scenario_3_delays():
    scenario = build_scenario(3)
    assert scenario.users[0].step_delay == 5
    assert scenario.users[1].step_delay == 10
    assert all(u.arrival_count == 1 and u.first_arrival == 1 for u in scenario.users)


def test_scenario_4_packets():
    assert build_scenario(4).users[0].packet_size == 14000


@pytest.mark.parametrize("scenario_id", [1, 2, 3, 4])
def test_default_action_count_is_the_first_variant(scenario_id):
    assert build_scenario(scenario_id).action_count == SCENARIO_ACTION_VARIANTS[scenario_id][0]


def test_action_count_override():
    assert build_scenario(2, action_count=3).action_count == 3
    assert load_scenario("4", action_count=4).action_count == 4


def test_unknown_scenario_id():
    with pytest.raises(ConfigError):
        build_scenario(5)


def test_unknown_scenario_reference():
    with pytest.raises(ConfigError):
        load_scenario("no/such/scenario.yaml")


@pytest.mark.parametrize("scenario_id", [1, 2, 3, 4])
def test_episodes_are_sixteen_subframes(scenario_id):
    scenario = build_scenario(scenario_id)
    assert scenario.episode_length == 16
    assert scenario.radio.total_prbs == 25
