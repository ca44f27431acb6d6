from dataclasses import replace

import numpy as np
import pytest
import torch

from dss.errors import ConfigError
from dss.model.network import NetworkConfig, build_network
from dss.planning.mcts import SearchConfig, SearchResult
from dss.radio.simulator import DssEnvironment
from dss.scenarios.randomization import RandomizationSpec
from dss.training.pipeline import (
    Trainer,
    TrainHyperparams,
    generate_episode,
    play_training_episode,
    train_iteration,
)

TINY = TrainHyperparams(
    iterations=2,
    episodes_per_iteration=1,
    train_steps=0,
    batch_size=4,
    unroll_steps=2,
    td_steps=4,
    window=2,
    hidden_size=8,
    state_size=4,
)
QUICK_SEARCH = SearchConfig(num_simulations=2)


def fixed_search(action: int, action_count: int = 3):
    def search_fn(observation):
        visits = np.zeros(action_count)
        visits[action] = 1.0
        return SearchResult(
            visit_counts=visits,
            priors=np.full(action_count, 1 / action_count),
            q_values=np.zeros(action_count),
            root_value=0.0,
        )

    return search_fn


def network_for(scenario):
    config = NetworkConfig(
        obs_dim=scenario.observation_size,
        action_count=scenario.action_count,
        window=scenario.window,
        hidden_size=8,
        state_size=4,
    )
    return build_network(config, seed=0)


def test_scripted_search_fixes_the_actions(scenario_1):
    env = DssEnvironment(scenario_1, seed=0)
    trajectory = generate_episode(
        network_for(scenario_1), env, QUICK_SEARCH, np.random.default_rng(0), fixed_search(2)
    )
    assert trajectory.actions == (2,) * 16
    assert trajectory.observations.shape == (16, scenario_1.observation_size)
    assert trajectory.scenario == "scenario_1"


def test_empty_traffic_episode_earns_every_reward(empty_traffic):
    env = DssEnvironment(empty_traffic, seed=0)
    trajectory = generate_episode(
        network_for(empty_traffic), env, QUICK_SEARCH, np.random.default_rng(0)
    )
    assert trajectory.rewards == (1.0,) * 16
    assert trajectory.episode_return == 16.0
    assert np.allclose(trajectory.policies.sum(axis=1), 1.0)


def test_seeded_episodes_repeat(scenario_2):
    network = network_for(scenario_2)
    spec = RandomizationSpec(base=scenario_2)
    first = play_training_episode(network, spec, QUICK_SEARCH, seed=11)
    second = play_training_episode(network, spec, QUICK_SEARCH, seed=11)
    assert first.actions == second.actions
    assert first.rewards == second.rewards
    assert np.array_equal(first.observations, second.observations)
    assert np.array_equal(first.policies, second.policies)


def test_iteration_without_updates_only_grows_the_buffer(scenario_3):
    trainer = Trainer(scenario_3, TINY, QUICK_SEARCH, seed=5)
    before = trainer.network.snapshot()
    report = train_iteration(trainer)
    assert report.iteration == 0
    assert report.episodes == 1
    assert len(trainer.buffer) == 1
    assert np.isnan(report.train_loss)
    assert 0.0 < report.eval_score <= 16.0
    for name, tensor in trainer.network.snapshot().items():
        assert torch.equal(tensor, before[name])


def test_reports_are_complete_and_ordered(scenario_1):
    hp = replace(TINY, iterations=3, train_steps=2)
    trainer = Trainer(scenario_1, hp, QUICK_SEARCH, seed=2)
    seen = []
    reports = trainer.train(on_iteration=lambda report, _: seen.append(report.iteration))
    assert [r.iteration for r in reports] == [0, 1, 2] == seen
    assert [r.buffer_size for r in reports] == [1, 2, 3]
    assert all(np.isfinite(r.train_loss) for r in reports)
    assert set(reports[0].loss_components) == {"total", "value", "policy", "reward"}


def test_training_is_reproducible(scenario_1):
    hp = replace(TINY, train_steps=2)
    runs = [Trainer(scenario_1, hp, QUICK_SEARCH, seed=4).train() for _ in range(2)]
    assert [r.eval_score for r in runs[0]] == [r.eval_score for r in runs[1]]
    assert [r.train_loss for r in runs[0]] == [r.train_loss for r in runs[1]]


def test_trainer_applies_the_episode_shape(scenario_1):
    trainer = Trainer(scenario_1, TINY, QUICK_SEARCH)
    assert trainer.scenario.window == 2
    assert trainer.network.config.obs_dim == 2 * 2 + 3 * 2 * 2
    assert len(trainer.eval_seeds()) == 1


def test_mismatched_network_is_rejected(scenario_1, small_network):
    with pytest.raises(ConfigError):
        Trainer(scenario_1, TINY, QUICK_SEARCH, network=small_network)


@pytest.mark.parametrize(
    "overrides",
    [
        {"td_steps": 2, "unroll_steps": 3},
        {"discount": 1.5},
        {"discount": 0.0},
        {"batch_size": 0},
        {"episodes_per_iteration": 0},
    ],
)
def test_invalid_hyperparams(overrides):
    with pytest.raises(ConfigError):
        TrainHyperparams(**overrides).validate()


def test_zero_iterations_are_allowed():
    assert TrainHyperparams(iterations=0, train_steps=0).validate().iterations == 0
