from dataclasses import dataclass, field, fields, replace
import hashlib
import logging
from typing import Any, Dict, List, Optional, Tuple

import yaml

from dss.errors import ConfigError
from dss.radio.channel import RadioParams
from dss.radio.traffic import Rat, ShareMode, UserConfig
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="scenarios/config.log",
)

REPRODUCTION_EPISODE_LENGTH = 16


@dataclass(frozen=True)
class MbsfnPattern:
    """
    Repeating cell-level MBSFN pattern applied to every LTE user.

    :param period: Pattern period in subframes.
    :type period: int
    :param mbsfn_subframes: Indices within the period that are MBSFN subframes.
    :type mbsfn_subframes: Tuple[int, ...]
    """

    period: int = 1
    mbsfn_subframes: Tuple[int, ...] = ()

    def validate(self):
        if self.period < 1:
            raise ConfigError(f"MBSFN period must be >= 1, got {self.period}")
        for index in self.mbsfn_subframes:
            if not 0 <= index < self.period:
                raise ConfigError(
                    f"MBSFN subframe {index} outside the pattern period {self.period}"
                )

    def is_mbsfn(self, subframe: int) -> bool:
        return subframe % self.period in self.mbsfn_subframes

    @property
    def flags(self) -> List[bool]:
        return [i in self.mbsfn_subframes for i in range(self.period)]


@dataclass(frozen=True)
class InterferencePattern:
    """
    Periodic high interference on one user: subframes p with
    (p - phase) mod period == 0 carry no data for that user.
    """

    user_id: int
    period: int
    phase: int = 0

    def validate(self):
        if self.period < 1:
            raise ConfigError(f"Interference period must be >= 1, got {self.period}")

    def hits(self, subframe: int) -> bool:
        return (subframe - self.phase) % self.period == 0


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Full description of one spectrum-sharing experiment.

    :param name: Scenario name used in reports.
    :type name: str
    :param users: Users of the cell; their order fixes every per-user vector.
    :type users: Tuple[UserConfig, ...]
    :param radio: Cell radio parameters.
    :type radio: RadioParams
    :param mbsfn: MBSFN pattern for LTE users.
    :type mbsfn: MbsfnPattern
    :param interference: Periodic interference patterns.
    :type interference: Tuple[InterferencePattern, ...]
    :param action_count: Size N of the quantized bandwidth-split action set.
    :type action_count: int
    :param episode_length: Subframes per episode.
    :type episode_length: int
    :param window: Look-ahead window T of the observation.
    :type window: int
    :param rayleigh_fading: Whether per-subframe Rayleigh gains are drawn.
    :type rayleigh_fading: bool
    """

    name: str
    users: Tuple[UserConfig, ...]
    radio: RadioParams = field(default_factory=RadioParams)
    mbsfn: MbsfnPattern = field(default_factory=MbsfnPattern)
    interference: Tuple[InterferencePattern, ...] = ()
    action_count: int = 3
    episode_length: int = REPRODUCTION_EPISODE_LENGTH
    window: int = 10
    rayleigh_fading: bool = False

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def observation_size(self) -> int:
        return 2 * self.num_users + 3 * self.num_users * self.window

    @property
    def max_packet_size(self) -> int:
        return max((u.packet_size for u in self.users), default=0)

    @property
    def capacity_overrides(self) -> Dict[int, Dict[ShareMode, float]]:
        return {
            u.user_id: dict(u.bits_per_prb_override)
            for u in self.users
            if u.bits_per_prb_override
        }

    def user_index(self, user_id: int) -> int:
        for index, user in enumerate(self.users):
            if user.user_id == user_id:
                return index
        raise ConfigError(f"Unknown user id {user_id} in scenario {self.name}")

    def interfered_users(self, subframe: int) -> frozenset:
        return frozenset(
            pattern.user_id for pattern in self.interference if pattern.hits(subframe)
        )

    def validate(self) -> "ScenarioConfig":
        """
        Checks every invariant of the scenario and its parts.

        :returns: The scenario itself, to allow chaining.
        :rtype: ScenarioConfig
        :raises ConfigError: On the first violated invariant.
        """
        if not self.users:
            raise ConfigError(f"Scenario {self.name} has no users")
        ids = [u.user_id for u in self.users]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"Scenario {self.name} has duplicate user ids {ids}")
        self.radio.validate()
        self.mbsfn.validate()
        for user in self.users:
            user.validate()
        for pattern in self.interference:
            pattern.validate()
            if pattern.user_id not in ids:
                raise ConfigError(
                    f"Interference pattern targets unknown user {pattern.user_id}"
                )
        if self.action_count < 2:
            raise ConfigError(f"action_count must be >= 2, got {self.action_count}")
        if self.episode_length < 1:
            raise ConfigError(f"episode_length must be >= 1, got {self.episode_length}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        return self

    def with_overrides(self, **overrides: Any) -> "ScenarioConfig":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"Unknown scenario fields {sorted(unknown)}")
        return replace(self, **overrides).validate()

    def to_dict(self) -> Dict:
        """
        Serializes the scenario into the documented scenario-file schema.

        :returns: Plain dictionary, safe for ``yaml.safe_dump``.
        :rtype: Dict
        """
        radio = {f.name: getattr(self.radio, f.name) for f in fields(self.radio)}
        users = []
        for user in self.users:
            entry = {
                "user_id": user.user_id,
                "rat": user.rat.name,
                "arrival_period": user.arrival_period,
                "packet_size": user.packet_size,
                "first_arrival": user.first_arrival,
                "step_delay": user.step_delay,
                "step_weight": user.step_weight,
                "weight_slope": user.weight_slope,
                "distance": user.distance,
            }
            if user.arrival_count is not None:
                entry["arrival_count"] = user.arrival_count
            if user.bits_per_prb_override:
                entry["bits_per_prb_override"] = {
                    mode.name.lower(): bits
                    for mode, bits in sorted(
                        user.bits_per_prb_override.items(), key=lambda kv: kv[0].value
                    )
                }
            users.append(entry)
        return {
            "name": self.name,
            "episode_length": self.episode_length,
            "window": self.window,
            "action_count": self.action_count,
            "rayleigh_fading": self.rayleigh_fading,
            "radio": radio,
            "mbsfn": {
                "period": self.mbsfn.period,
                "subframes": list(self.mbsfn.mbsfn_subframes),
            },
            "interference": [
                {"user_id": p.user_id, "period": p.period, "phase": p.phase}
                for p in self.interference
            ],
            "users": users,
        }

    @staticmethod
    def from_dict(data: Dict) -> "ScenarioConfig":
        """
        Builds a scenario from the scenario-file schema.

        :param data: Parsed scenario file.
        :type data: Dict
        :returns: The validated scenario.
        :rtype: ScenarioConfig
        :raises ConfigError: On missing users, unknown keys or invalid values.
        """
        if "users" not in data:
            raise ConfigError(f"Scenario data is missing 'users'. Available keys {list(data)}")
        try:
            radio = RadioParams(**(data.get("radio") or {}))
            users = tuple(_user_from_dict(entry) for entry in data["users"])
            mbsfn_data = data.get("mbsfn") or {}
            mbsfn = MbsfnPattern(
                period=int(mbsfn_data.get("period", 1)),
                mbsfn_subframes=tuple(int(i) for i in mbsfn_data.get("subframes", ())),
            )
            interference = tuple(
                InterferencePattern(
                    user_id=int(p["user_id"]),
                    period=int(p["period"]),
                    phase=int(p.get("phase", 0)),
                )
                for p in data.get("interference") or []
            )
            scenario = ScenarioConfig(
                name=str(data.get("name", "custom")),
                users=users,
                radio=radio,
                mbsfn=mbsfn,
                interference=interference,
                action_count=int(data.get("action_count", 3)),
                episode_length=int(
                    data.get("episode_length", REPRODUCTION_EPISODE_LENGTH)
                ),
                window=int(data.get("window", 10)),
                rayleigh_fading=bool(data.get("rayleigh_fading", False)),
            )
        except (KeyError, TypeError) as e:
            raise ConfigError(f"Malformed scenario data: {e}") from e
        return scenario.validate()

    @staticmethod
    def from_yaml(yaml_file: str) -> "ScenarioConfig":
        with open(yaml_file, "r") as f:
            data = yaml.safe_load(f)
        if not isinstance(data, dict):
            raise ConfigError(f"Scenario file {yaml_file} does not hold a mapping")
        logger.debug(f"Loaded scenario file {yaml_file}")
        return ScenarioConfig.from_dict(data)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def content_hash(self) -> str:
        """
        Git-style blob hash (sha1 over ``blob <len>\\0<content>``) of the
        canonical YAML form, used to stamp run manifests.
        """
        content = self.to_yaml().encode("utf-8")
        header = f"blob {len(content)}\0".encode("utf-8")
        return hashlib.sha1(header + content).hexdigest()


def _user_from_dict(entry: Dict) -> UserConfig:
    rat_name = str(entry["rat"]).upper()
    if rat_name not in Rat.__members__:
        raise ConfigError(f"Unknown RAT {entry['rat']}, expected one of {list(Rat.__members__)}")
    override: Dict[ShareMode, float] = {}
    for mode_name, bits in (entry.get("bits_per_prb_override") or {}).items():
        mode_key = str(mode_name).upper()
        if mode_key not in ShareMode.__members__:
            raise ConfigError(
                f"Unknown sharing mode {mode_name}, expected one of "
                f"{[m.lower() for m in ShareMode.__members__]}"
            )
        override[ShareMode[mode_key]] = float(bits)
    arrival_count: Optional[int] = entry.get("arrival_count")
    return UserConfig(
        user_id=int(entry["user_id"]),
        rat=Rat[rat_name],
        arrival_period=int(entry["arrival_period"]),
        packet_size=int(entry["packet_size"]),
        first_arrival=int(entry.get("first_arrival", 0)),
        step_delay=int(entry.get("step_delay", 3)),
        step_weight=float(entry.get("step_weight", 5.0)),
        weight_slope=float(entry.get("weight_slope", 1e-5)),
        distance=float(entry.get("distance", 100.0)),
        arrival_count=None if arrival_count is None else int(arrival_count),
        bits_per_prb_override=override,
    )
