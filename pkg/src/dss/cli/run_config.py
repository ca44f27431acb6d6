from dataclasses import asdict, dataclass, field, fields, replace
import logging
from typing import Any, Dict, List, Mapping, Optional, Sequence

import yaml

from dss.errors import ConfigError
from dss.planning.mcts import SearchConfig
from dss.training.pipeline import TrainHyperparams
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="cli/run_config.log",
)

COMMANDS = ("train", "eval", "oracle", "export-plot-data")
DEFAULT_AGENTS = ("muzero", "proportional", "equal", "alternating", "oracle")
_SCENARIO_KEYS = ("name", "action_count", "episode_length", "window", "rayleigh_fading")


@dataclass
class RunConfig:
    """
    Everything one command needs, resolved from defaults, a YAML file and
    command-line flags (in that order of precedence, lowest first).

    :param command: One of ``train``, ``eval``, ``oracle``, ``export-plot-data``.
    :type command: str
    :param scenario: Scenario id or scenario YAML file.
    :type scenario: str
    :param action_count: [Optional] Action set size N.
    :type action_count: Optional[int]
    :param seed: Run seed every other seed is derived from.
    :type seed: int
    :param seeds: Evaluation seeds of ``eval``; ``train`` derives its own.
    :type seeds: List[int]
    :param out_dir: Run directory.
    :type out_dir: str
    :param checkpoint: Checkpoint read by ``eval``.
    :type checkpoint: Optional[str]
    :param run_dirs: Training runs read by ``export-plot-data``.
    :type run_dirs: List[str]
    :param agents: Agents of ``eval``.
    :type agents: List[str]
    :param overwrite: Whether an existing run directory may be replaced.
    :type overwrite: bool
    :param record_wall_time: Whether ``scores.csv`` gets wall times.
    :type record_wall_time: bool
    :param randomize: Whether training samples randomized environments.
    :type randomize: bool
    :param experimental_search: Adds the search-at-test-time agent to ``eval``.
    :type experimental_search: bool
    :param oracle_horizon: [Optional] Horizon of the oracle.
    :type oracle_horizon: Optional[int]
    :param node_budget: Oracle node budget.
    :type node_budget: int
    """

    command: str = "train"
    scenario: str = "3"
    action_count: Optional[int] = None
    seed: int = 0
    seeds: List[int] = field(default_factory=lambda: [0])
    out_dir: str = "runs/default"
    checkpoint: Optional[str] = None
    run_dirs: List[str] = field(default_factory=list)
    agents: List[str] = field(default_factory=lambda: list(DEFAULT_AGENTS))
    overwrite: bool = False
    record_wall_time: bool = False
    randomize: bool = True
    experimental_search: bool = False
    oracle_horizon: Optional[int] = None
    node_budget: int = 10**7
    train: TrainHyperparams = field(default_factory=TrainHyperparams)
    search: SearchConfig = field(default_factory=SearchConfig)
    scenario_overrides: Dict[str, Any] = field(default_factory=dict)
    source_text: str = field(default="", repr=False)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command {self.command}. Available commands {list(COMMANDS)}")
        if self.command == "eval" and not self.checkpoint:
            raise ConfigError("eval needs a checkpoint")
        if self.command == "eval" and not self.seeds:
            raise ConfigError("eval needs at least one seed")
        if self.command == "export-plot-data" and not self.run_dirs:
            raise ConfigError("export-plot-data needs at least one run directory")
        if self.node_budget < 1:
            raise ConfigError(f"node_budget must be >= 1, got {self.node_budget}")
        self.train.validate()
        self.search.validate()
        return self

    def to_dict(self) -> Dict[str, Any]:
        """
        Effective configuration as flat dotted keys, the form written back to
        ``config.yaml``.
        """
        flat: Dict[str, Any] = {}
        for f in fields(self):
            if f.name in ("train", "search", "scenario_overrides", "source_text"):
                continue
            flat[f.name] = getattr(self, f.name)
        flat.update({f"train.{k}": v for k, v in asdict(self.train).items()})
        flat.update({f"search.{k}": v for k, v in asdict(self.search).items()})
        flat.update({f"scenario.{k}": v for k, v in self.scenario_overrides.items()})
        return flat


def flatten(data: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    """
    Nested mappings become dotted keys; ``{"train": {"iterations": 3}}`` and
    ``{"train.iterations": 3}`` are the same configuration.
    """
    flat: Dict[str, Any] = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping) and name.split(".")[0] in ("train", "search", "scenario"):
            flat.update(flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _coerce(name: str, value: Any, default: Any) -> Any:
    if value is None or default is None:
        return value
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ValueError(f"expected true or false, got {value!r}")
            return value
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"expected an integer, got {value!r}")
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, list):
            return list(value) if isinstance(value, (list, tuple)) else [value]
        if isinstance(default, str):
            return str(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value for {name}: {e}") from e
    return value


def _apply(target: Any, values: Dict[str, Any], prefix: str) -> Any:
    known = {f.name: f for f in fields(target)}
    changes = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"Unknown key {prefix}{key}. Known keys {sorted(known)}")
        changes[key] = _coerce(f"{prefix}{key}", value, getattr(target, key))
    return replace(target, **changes)


def resolve_run_config(
    file_values: Optional[Mapping[str, Any]] = None,
    cli_values: Optional[Mapping[str, Any]] = None,
    source_text: str = "",
) -> RunConfig:
    """
    Merges defaults, file values and command-line values (highest last).

    :param file_values: Parsed YAML run config, nested or dotted.
    :type file_values: Optional[Mapping[str, Any]]
    :param cli_values: Flag values and ``--set`` pairs, dotted.
    :type cli_values: Optional[Mapping[str, Any]]
    :param source_text: Verbatim run-config file, kept for provenance.
    :type source_text: str
    :returns: The validated configuration.
    :rtype: RunConfig
    :raises ConfigError: On unknown keys or invalid values.
    """
    merged: Dict[str, Any] = {}
    merged.update(flatten(file_values or {}))
    merged.update(flatten(cli_values or {}))

    top: Dict[str, Any] = {}
    train: Dict[str, Any] = {}
    search: Dict[str, Any] = {}
    scenario: Dict[str, Any] = {}
    for key, value in merged.items():
        head, _, rest = key.partition(".")
        if head == "train" and rest:
            train[rest] = value
        elif head == "search" and rest:
            search[rest] = value
        elif head == "scenario" and rest:
            if rest not in _SCENARIO_KEYS:
                raise ConfigError(f"Unknown key {key}. Known keys {list(_SCENARIO_KEYS)}")
            scenario[rest] = value
        else:
            top[key] = value

    if top.get("scenario") is not None:
        top["scenario"] = str(top["scenario"])
    for name in ("train", "search", "scenario_overrides", "source_text"):
        if name in top:
            raise ConfigError(f"{name} cannot be set directly")
    config = _apply(RunConfig(), top, "")
    config = replace(
        config,
        train=_apply(config.train, train, "train."),
        search=_apply(config.search, search, "search."),
        scenario_overrides=scenario,
        source_text=source_text,
    )
    return config.validate()


def load_run_config(
    config_file: Optional[str] = None, cli_values: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    file_values: Dict[str, Any] = {}
    source_text = ""
    if config_file:
        try:
            with open(config_file, "r") as f:
                source_text = f.read()
        except OSError as e:
            raise ConfigError(f"Cannot read run config {config_file}: {e}") from e
        parsed = yaml.safe_load(source_text) or {}
        if not isinstance(parsed, dict):
            raise ConfigError(f"Run config {config_file} does not hold a mapping")
        file_values = parsed
        logger.debug(f"Loaded run config {config_file}")
    return resolve_run_config(file_values, cli_values, source_text)


def parse_overrides(pairs: Sequence[str]) -> Dict[str, Any]:
    """
    Parses ``key=value`` pairs; values are read as YAML scalars, so
    ``train.iterations=3`` gives an int and ``randomize=false`` a bool.
    """
    parsed: Dict[str, Any] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"Override {pair!r} is not of the form key=value")
        parsed[key.strip()] = yaml.safe_load(value) if value else None
    return parsed

