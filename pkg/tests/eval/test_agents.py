import math

import pytest
import torch

from dss.eval.agents import (
    AlternatingAgent,
    EqualSplitAgent,
    MuZeroAgent,
    ProportionalAgent,
    ScriptedAgent,
    baseline_agents,
    nearest_action,
)
from dss.eval.evaluator import run_episode
from dss.eval.oracle import oracle_plan
from dss.model.network import NetworkConfig, build_network
from dss.planning import mcts
from dss.radio.environment import NetworkState, action_space, env_step
from dss.radio.observation import build_observation
from dss.radio.traffic import Rat, UserConfig, constant_override
from dss.scenarios.config import ScenarioConfig


def two_user_scenario(nr_bits: int, lte_bits: int) -> ScenarioConfig:
    override = constant_override(1000.0)
    return ScenarioConfig(
        name="two_users",
        users=(
            UserConfig(0, Rat.NR, arrival_period=4, packet_size=nr_bits, bits_per_prb_override=override),
            UserConfig(1, Rat.LTE, arrival_period=4, packet_size=lte_bits, bits_per_prb_override=override),
        ),
    ).validate()


def decide(agent, scenario, subframe: int = 0) -> int:
    state = NetworkState.initial(scenario)
    for _ in range(subframe):
        state, _, _ = env_step(state, 0)
    agent.reset(state)
    return agent.act(build_observation(state), state)


def test_nearest_action_ties_go_to_more_lte():
    actions = action_space(3, 25)
    assert nearest_action(actions, 6.25).lte_prbs == 0
    assert nearest_action(actions, 12.5).lte_prbs == 13
    assert nearest_action(actions, 19.0).lte_prbs == 25


def test_proportional_favours_the_larger_demand(scenario_1):
    # 25 * 15 / 60 = 6.25 is closer to 0 than to 13
    assert ProportionalAgent().demand(NetworkState.initial(scenario_1)) == {Rat.LTE: 15, Rat.NR: 45}
    assert decide(ProportionalAgent(), scenario_1) == 0


def test_proportional_splits_balanced_demand():
    scenario = two_user_scenario(10000, 10000)
    assert ProportionalAgent().demand(NetworkState.initial(scenario)) == {Rat.LTE: 10, Rat.NR: 10}
    assert decide(ProportionalAgent(), scenario) == 1


def test_proportional_with_nr_demand_only():
    assert decide(ProportionalAgent(), two_user_scenario(20000, 0)) == 0


def test_proportional_without_demand(empty_traffic):
    assert decide(ProportionalAgent(), empty_traffic) == 0


def test_equal_split(scenario_1):
    assert decide(EqualSplitAgent(), scenario_1) == 1
    four_actions = scenario_1.with_overrides(action_count=4)
    assert action_space(4, 25)[decide(EqualSplitAgent(), four_actions)].lte_prbs == 17


def test_alternating_phases(scenario_1):
    nr_first, lte_first = AlternatingAgent(), AlternatingAgent(lte_first=True)
    assert [decide(nr_first, scenario_1, p) for p in range(4)] == [0, 2, 0, 2]
    assert [decide(lte_first, scenario_1, p) for p in range(4)] == [2, 0, 2, 0]
    assert {a.name for a in baseline_agents()} == {
        "proportional",
        "equal",
        "alternating_nr_first",
        "alternating_lte_first",
    }


def test_scripted_agent_replays(scenario_2):
    result = run_episode(ScriptedAgent([1] * 16), scenario_2)
    assert result.actions == [1] * 16


def test_learned_agent_reads_only_the_observation(scenario_1):
    config = NetworkConfig(obs_dim=scenario_1.observation_size, action_count=3, hidden_size=8, state_size=4)
    network = build_network(config)
    with torch.no_grad():
        for parameter in network.parameters():
            parameter.zero_()
    searches = dict(mcts.search_invocations)
    result = run_episode(MuZeroAgent(network), scenario_1)
    assert result.actions == [0] * 16
    assert network.calls["dynamics"] == 0
    assert network.calls["represent"] == 16
    assert mcts.search_invocations == searches


def test_proportional_misses_the_lte_deadline(scenario_1):
    result = run_episode(ProportionalAgent(), scenario_1)
    assert min(result.rewards) <= math.exp(-5)


def test_proportional_counts_both_rats_when_one_fills_the_band(scenario_4):
    # NR needs 28 shared PRBs on its own, LTE still adds its 20
    assert ProportionalAgent().demand(NetworkState.initial(scenario_4)) == {Rat.LTE: 20, Rat.NR: 28}
    assert decide(ProportionalAgent(), scenario_4) == 1


def test_proportional_falls_short_of_the_oracle_on_scenario_4(scenario_4):
    # some user is left waiting one subframe on every odd p
    result = run_episode(ProportionalAgent(), scenario_4)
    assert result.actions[:4] == [1, 1, 1, 0]
    assert result.score < oracle_plan(scenario_4).score
    assert result.score == pytest.approx(16.0, abs=1e-3)
