import os

import pytest

from dss.cli.main import build_parser, cli_values
from dss.cli.run_config import flatten, load_run_config, parse_overrides, resolve_run_config
from dss.errors import ConfigError

TRAIN_CONFIG = os.path.join(os.path.dirname(__file__), "..", "..", "configs", "train", "scenario_3.yaml")


def test_defaults():
    config = resolve_run_config()
    assert config.command == "train"
    assert config.train.episodes_per_iteration == 100
    assert config.train.train_steps == 1000
    assert config.search.num_simulations == 64
    assert config.agents == ["muzero", "proportional", "equal", "alternating", "oracle"]


def test_command_line_beats_the_file():
    config = resolve_run_config(
        {"seed": 3, "train": {"iterations": 4, "batch_size": 8}},
        {"seed": 9, "train.iterations": 2},
    )
    assert config.seed == 9
    assert config.train.iterations == 2
    assert config.train.batch_size == 8


def test_nested_and_dotted_keys_are_equivalent():
    assert flatten({"search": {"num_simulations": 8}}) == {"search.num_simulations": 8}
    nested = resolve_run_config({"search": {"num_simulations": 8}})
    dotted = resolve_run_config({"search.num_simulations": 8})
    assert nested.search == dotted.search


def test_shipped_train_config():
    config = load_run_config(TRAIN_CONFIG)
    assert config.seed == 7
    assert config.scenario == "3"
    assert config.train.learning_rate == 1e-4
    assert config.train.train_steps == 1000
    assert "learning_rate" in config.source_text


def test_scenario_overrides_are_collected():
    config = resolve_run_config({"scenario": {"window": 4}}, {"scenario": 2})
    assert config.scenario == "2"
    assert config.scenario_overrides == {"window": 4}
    assert config.to_dict()["scenario.window"] == 4


def test_override_pairs_are_yaml_scalars():
    assert parse_overrides(["train.iterations=3", "randomize=false", "out_dir=runs/x"]) == {
        "train.iterations": 3,
        "randomize": False,
        "out_dir": "runs/x",
    }
    with pytest.raises(ConfigError):
        parse_overrides(["iterations"])


def test_parser_routes_flags_to_keys():
    args = build_parser().parse_args(
        ["train", "-s", "1", "--iterations", "2", "--no-randomize", "--set", "train.batch_size=4"]
    )
    assert cli_values(args) == {
        "command": "train",
        "scenario": "1",
        "train.iterations": 2,
        "randomize": False,
        "train.batch_size": 4,
    }


@pytest.mark.parametrize(
    "file_values",
    [
        {"colour": "blue"},
        {"train.unknown": 1},
        {"scenario.users": []},
        {"train": {"iterations": "many"}},
        {"overwrite": "yes"},
        {"train": {"td_steps": 2, "unroll_steps": 3}},
        {"command": "serve"},
        {"command": "eval"},
    ],
)
def test_invalid_configs(file_values):
    with pytest.raises(ConfigError):
        resolve_run_config(file_values)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "absent.yaml"))
