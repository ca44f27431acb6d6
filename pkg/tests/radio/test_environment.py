import math

import numpy as np
import pytest

from dss.errors import ConfigError, DimensionError, EpisodeFinishedError
from dss.radio.environment import (
    NetworkState,
    action_space,
    apply_arrivals,
    bits_per_prb,
    env_step,
    make_context,
    max_bits_per_prb,
    resolve_action,
    rollout,
)
from dss.radio.traffic import Rat, UserConfig, constant_override
from dss.scenarios.library import build_scenario
from dss.scenarios.randomization import RandomizationSpec, sample_environment


@pytest.mark.parametrize(
    "action_count, expected",
    [(2, [0, 25]), (3, [0, 13, 25]), (4, [0, 8, 17, 25])],
)
def test_action_space(action_count, expected):
    actions = action_space(action_count, 25)
    assert [a.lte_prbs for a in actions] == expected
    assert [a.index for a in actions] == list(range(action_count))
    assert all(a.lte_prbs + a.nr_prbs == 25 for a in actions)


def test_action_space_needs_two_actions():
    with pytest.raises(ConfigError):
        action_space(1, 25)


def test_resolve_action_rejects_unknown_index(scenario_3):
    with pytest.raises(DimensionError):
        resolve_action(scenario_3, 3)


def test_link_budget_capacity(link_budget_scenario):
    shared = make_context(link_budget_scenario, 0, 13)
    nr_alone = make_context(link_budget_scenario, 0, 0)
    assert bits_per_prb(link_budget_scenario, 1, shared) == pytest.approx(999.0 * 12 / 14)
    assert bits_per_prb(link_budget_scenario, 0, shared) == pytest.approx(999.0 * 11 / 14)
    assert bits_per_prb(link_budget_scenario, 0, nr_alone) == pytest.approx(999.0 * 13 / 14)


def test_lte_user_gets_nothing_in_mbsfn_subframe(scenario_1):
    context = make_context(scenario_1, 2, 13)
    assert bits_per_prb(scenario_1, 1, context) == 0.0
    assert bits_per_prb(scenario_1, 0, context) == 1000.0
    assert bits_per_prb(scenario_1, 1, make_context(scenario_1, 1, 13)) == 1000.0


def test_interfered_user_gets_nothing(scenario_2):
    assert bits_per_prb(scenario_2, 1, make_context(scenario_2, 0, 25)) == 0.0
    assert bits_per_prb(scenario_2, 1, make_context(scenario_2, 3, 25)) == 0.0
    assert bits_per_prb(scenario_2, 1, make_context(scenario_2, 1, 25)) == 1000.0


def test_scenario_4_transport_block_sizes(scenario_4):
    alone = make_context(scenario_4, 0, 0)
    shared = make_context(scenario_4, 0, 13)
    assert 25 * bits_per_prb(scenario_4, 0, alone) == pytest.approx(14112)
    assert 25 * bits_per_prb(scenario_4, 0, shared) == pytest.approx(12576)
    assert 20 * bits_per_prb(scenario_4, 1, shared) >= 10000
    assert max_bits_per_prb(scenario_4) == pytest.approx(14112 / 25)


def test_arrivals(scenario_1, scenario_3):
    state = NetworkState.initial(scenario_1)
    state.subframe_index = 4
    arrived = apply_arrivals(state)
    assert arrived.queues[0].packets == [(4, 45000)]
    assert state.queues[0].is_empty()

    state = NetworkState.initial(scenario_3)
    state.subframe_index = 1
    assert apply_arrivals(state).buffer_bits() == [90000, 90000]


def test_empty_buffers_give_reward_one(scenario_3):
    state = NetworkState.initial(scenario_3)
    for action in range(3):
        _, reward, result = env_step(state, action)
        assert reward == 1.0
        assert result.served_bits == (0, 0)


def test_scenario_3_all_nr_drains_25000_bits(scenario_3):
    state, _, _ = env_step(NetworkState.initial(scenario_3), 0)
    state, _, result = env_step(state, 0)
    assert result.served_bits == (25000, 0)
    assert result.allocated_prbs == (25, 0)
    assert state.buffer_bits() == [65000, 90000]


def test_lte_serves_nothing_in_mbsfn_subframe(scenario_1):
    state = NetworkState.initial(scenario_1)
    state, _, _ = env_step(state, 0)
    state, _, _ = env_step(state, 0)
    assert state.buffer_bits()[1] == 15000
    _, _, result = env_step(state, 1)
    assert result.lte_prbs == 13
    assert result.served_bits[1] == 0


def test_env_step_leaves_its_input_untouched(scenario_1):
    state = NetworkState.initial(scenario_1)
    before = state.copy()
    next_state, _, _ = env_step(state, 1)
    assert state == before
    assert next_state.subframe_index == 1


def test_stepping_a_finished_episode_fails(empty_traffic):
    state = NetworkState.initial(empty_traffic)
    for _ in range(empty_traffic.episode_length):
        state, _, _ = env_step(state, 0)
    assert state.finished
    with pytest.raises(EpisodeFinishedError):
        env_step(state, 0)


def test_empty_traffic_rollout_scores_16(empty_traffic):
    score, results = rollout(empty_traffic, [1] * 16)
    assert score == 16.0
    assert len(results) == 16


def test_scenario_3_nr_first_schedule_is_nearly_perfect(scenario_3):
    actions = [0, 0, 0, 0, 0, 2, 2, 2, 2] + [0] * 7
    score, results = rollout(scenario_3, actions)
    slope = scenario_3.users[0].weight_slope
    assert score < 16.0
    assert score >= 16.0 - 16 * (1 - math.exp(-2 * slope * 16))
    assert all(w <= slope * 8 for r in results for w in r.weights)


def test_scheduler_serves_heaviest_user_first(scenario_1):
    scenario = scenario_1.with_overrides(
        users=(
            scenario_1.users[0],
            scenario_1.users[1],
            UserConfig(
                2,
                Rat.LTE,
                arrival_period=4,
                packet_size=15000,
                first_arrival=1,
                bits_per_prb_override=constant_override(1000.0),
            ),
        )
    )
    state = NetworkState.initial(scenario)
    state, _, _ = env_step(state, 0)
    state, _, result = env_step(state, 2)
    # user 1 has waited one subframe, user 2 just arrived
    assert result.allocated_prbs[1] == 15
    assert result.allocated_prbs[2] == 10
    assert result.served_bits[2] == 10000


def _fuzz_steps(base, episodes, seed):
    """
    Random episodes over randomized copies of ``base``; yields the state
    before and after every subframe.
    """
    rng = np.random.default_rng(seed)
    spec = RandomizationSpec(base=base, packet_size_scale=(0.2, 2.0), period_jitter=(0, 2))
    for _ in range(episodes):
        scenario = sample_environment(spec, rng)
        state = NetworkState.initial(scenario, int(rng.integers(1 << 30)))
        actions = action_space(scenario.action_count, scenario.radio.total_prbs)
        while not state.finished:
            action = int(rng.integers(scenario.action_count))
            before = state
            state, reward, result = env_step(state, action)
            yield scenario, before, state, reward, result, actions[action]


def _check_fuzzed_episodes(scenario_id, episodes, seed):
    steps = 0
    for scenario, _, state, reward, result, action in _fuzz_steps(
        build_scenario(scenario_id), episodes, seed
    ):
        steps += 1
        assert 0.0 < reward <= 1.0
        for j in range(scenario.num_users):
            assert state.served_bits[j] <= state.arrived_bits[j]
            assert state.queues[j].total_bits == state.arrived_bits[j] - state.served_bits[j]
            if state.queues[j].is_empty():
                assert result.weights[j] == 0.0
        lte = sum(p for p, u in zip(result.allocated_prbs, scenario.users) if u.rat == Rat.LTE)
        nr = sum(p for p, u in zip(result.allocated_prbs, scenario.users) if u.rat == Rat.NR)
        assert lte <= action.lte_prbs
        assert nr <= action.nr_prbs
        if all(q.is_empty() for q in state.queues):
            assert reward == 1.0
        if reward < 1.0:
            assert any(not q.is_empty() for q in state.queues)
    return steps


@pytest.mark.parametrize("scenario_id", [1, 2, 3, 4])
def test_fuzzed_episodes_conserve_bits_and_bound_rewards(scenario_id):
    assert _check_fuzzed_episodes(scenario_id, 150, scenario_id) == 150 * 16


@pytest.mark.slow
@pytest.mark.parametrize("chunk", range(5))
@pytest.mark.parametrize("scenario_id", [1, 2, 3, 4])
def test_fuzzed_episodes_at_full_size(scenario_id, chunk):
    # 4 scenarios x 5 chunks x 500 episodes: 10^4 episodes, 1.6 * 10^5 states
    assert _check_fuzzed_episodes(scenario_id, 500, 100 * scenario_id + chunk) == 500 * 16


@pytest.mark.parametrize("scenario_id", [1, 2, 3, 4])
def test_more_lte_prbs_never_serve_fewer_lte_bits(scenario_id):
    checked = 0
    for scenario, before, _, _, _, _ in _fuzz_steps(build_scenario(scenario_id), 60, 7 + scenario_id):
        p = before.subframe_index
        lte_users = [j for j, u in enumerate(scenario.users) if u.rat == Rat.LTE]
        interfered = scenario.interfered_users(p)
        if scenario.mbsfn.is_mbsfn(p) or any(scenario.users[j].user_id in interfered for j in lte_users):
            continue
        served = [
            sum(env_step(before, a)[2].served_bits[j] for j in lte_users)
            for a in range(scenario.action_count)
        ]
        assert served == sorted(served)
        checked += 1
    assert checked > 0


def test_rayleigh_episodes_replay_from_their_seed(link_budget_scenario):
    scenario = link_budget_scenario.with_overrides(rayleigh_fading=True)
    actions = [0, 1, 2, 1] * 4
    first = rollout(scenario, actions, seed=11)
    second = rollout(scenario, actions, seed=11)
    assert first[0] == second[0]
    assert [r.served_bits for r in first[1]] == [r.served_bits for r in second[1]]
    gains = NetworkState.initial(scenario, 11).fading_gains
    assert gains.shape == (2, scenario.episode_length + scenario.window)
    assert not np.array_equal(gains, NetworkState.initial(scenario, 12).fading_gains)
