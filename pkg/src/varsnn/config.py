"""Experiment configuration.

Every tunable constant lives in one nested document with fixed sections.
A config file must list every key of every section; command-line overrides
are applied on top with dotted keys (``arena.corridor_width=0.4``).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError

CONDITIONS = ("MEM", "RSM", "HP", "PEO", "CONST")


@dataclass(frozen=True)
class ExperimentSection:
    condition: str = "MEM"
    generations: int = 1000
    population_size: int = 100
    repeats: int = 30
    sample_interval: int = 20
    seed: int = 0
    parallel: int = 1

    def validate(self):
        if self.condition not in CONDITIONS:
            raise ConfigError(f"experiment.condition must be one of {CONDITIONS}, got {self.condition!r}")
        _positive(self, "generations", "repeats", "sample_interval", "parallel")
        if self.population_size < 2:
            raise ConfigError("experiment.population_size must be >= 2")
        if self.seed < 0:
            raise ConfigError("experiment.seed must be >= 0")


@dataclass(frozen=True)
class NetworkSection:
    a: float = 0.3
    b: float = 0.05
    c: float = 0.0
    theta_y: float = 1.0
    ls_on_spike: int = 3
    theta_ls: int = 4
    steps_per_timestep: int = 21
    initial_hidden: int = 9
    c_ini: float = 0.5

    def validate(self):
        _positive(self, "a", "ls_on_spike", "steps_per_timestep", "initial_hidden")
        if not self.theta_y > self.c:
            raise ConfigError("network.theta_y must exceed network.c")
        if self.b < 0:
            raise ConfigError("network.b must be >= 0")

    @property
    def high_spike_count(self) -> int:
        # "more than half" of the steps
        return self.steps_per_timestep // 2 + 1


@dataclass(frozen=True)
class SynapseSection:
    r_on: float = 0.01
    r_off: float = 1.0
    q_min: float = 0.0098
    big_l: int = 1000
    beta_min: float = 1.0
    beta_max_hp: float = 101.0
    beta_max_peo: float = 100.0
    beta_step_fraction: float = 0.1
    s_n_min: int = 2
    s_n_max: int = 6
    lrs_weight: float = 0.9
    hrs_weight: float = 0.1
    memristor_init_weight: float = 0.5

    def validate(self):
        _positive(self, "r_on", "r_off", "q_min", "big_l", "beta_min", "beta_step_fraction")
        if not self.r_on < self.r_off:
            raise ConfigError("synapse.r_on must be < synapse.r_off")
        if self.beta_min < 1:
            raise ConfigError("synapse.beta_min must be >= 1")
        if not self.beta_min < self.beta_max_peo <= self.beta_max_hp:
            raise ConfigError("synapse beta bounds must satisfy beta_min < beta_max_peo <= beta_max_hp")
        q_max = (self.r_off - self.r_on) / (self.r_on * self.r_off * self.beta_max_hp)
        if not q_max > self.q_min:
            raise ConfigError("synapse.q_min too large: q_max(beta_max_hp) must exceed it")
        if not 1 <= self.s_n_min <= self.s_n_max:
            raise ConfigError("synapse s_n bounds must satisfy 1 <= s_n_min <= s_n_max")
        if not 0.01 <= self.memristor_init_weight <= 1.0:
            raise ConfigError("synapse.memristor_init_weight must lie in [0.01, 1]")

    @property
    def beta_total_range(self) -> float:
        # HP span plus PEO-PANI span: 100 + 99 = 199 with the default bounds
        return (self.beta_max_hp - self.beta_min) + (self.beta_max_peo - self.beta_min)


@dataclass(frozen=True)
class EvolutionSection:
    mu_init_max: float = 0.25
    psi_init_max: float = 0.5
    omega_init_max: float = 1.0
    tau_init_max: float = 0.25
    iota_init_max: float = 0.25
    rate_floor: float = 1e-6
    weight_perturb: float = 0.1
    connection_probability: float = 0.5
    excitatory_probability: float = 0.5

    def validate(self):
        for name in ("mu_init_max", "psi_init_max", "omega_init_max", "tau_init_max", "iota_init_max",
                     "connection_probability", "excitatory_probability"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ConfigError(f"evolution.{name} must lie in (0, 1]")
        if not 0 < self.rate_floor < 1:
            raise ConfigError("evolution.rate_floor must lie in (0, 1)")
        if self.weight_perturb < 0:
            raise ConfigError("evolution.weight_perturb must be >= 0")


@dataclass(frozen=True)
class ArenaSection:
    corridor_width: float = 0.5
    stem_bottom: float = -1.0
    arm_bottom: float = 0.5
    arm_top: float = 1.0
    arm_half_span: float = 1.0
    zone_size: float = 0.3
    light_x: float = 0.5
    light_y: float = 1.0

    def validate(self):
        _positive(self, "corridor_width", "zone_size", "arm_half_span")
        if not self.stem_bottom < self.arm_bottom < self.arm_top:
            raise ConfigError("arena requires stem_bottom < arm_bottom < arm_top")
        if not self.corridor_width / 2 < self.arm_half_span:
            raise ConfigError("arena.arm_half_span must exceed half the corridor width")
        if self.zone_size > min(self.corridor_width, self.arm_top - self.arm_bottom):
            raise ConfigError("arena.zone_size must fit inside the corridors")
        if 2 * self.zone_size > self.arm_half_span * 2 - self.corridor_width:
            raise ConfigError("arena.zone_size too large: reward zones would overlap the stem")


@dataclass(frozen=True)
class RobotSection:
    radius: float = 0.055
    wheel_base: float = 0.053
    step_distance: float = 0.01
    ir_range: float = 0.05
    light_saturation_distance: float = 0.5
    light_noise: float = 0.10
    ir_noise: float = 0.02
    slip_probability: float = 0.1
    bump_reverse: float = 0.1
    bump_penalty: int = 10
    bump_cone_deg: float = 45.0
    sensor_bearings_deg: tuple = (90.0, 0.0, -90.0)
    light_raw_min: float = 8.0
    light_raw_max: float = 500.0
    ir_raw_max: float = 1023.0

    def validate(self):
        _positive(self, "radius", "wheel_base", "step_distance", "ir_range", "light_saturation_distance",
                  "light_raw_max", "ir_raw_max")
        if len(self.sensor_bearings_deg) != 3:
            raise ConfigError("robot.sensor_bearings_deg must list exactly 3 bearings")
        if not 0 <= self.slip_probability <= 1:
            raise ConfigError("robot.slip_probability must lie in [0, 1]")
        if not 0 <= self.light_raw_min < self.light_raw_max:
            raise ConfigError("robot.light_raw_min must be >= 0 and < robot.light_raw_max")
        if self.bump_penalty < 0 or self.bump_reverse < 0 or self.light_noise < 0 or self.ir_noise < 0:
            raise ConfigError("robot noise, bump_reverse and bump_penalty must be >= 0")


@dataclass(frozen=True)
class TrialSection:
    phase_budget: int = 4000

    def validate(self):
        _positive(self, "phase_budget")

    @property
    def fail_fitness(self) -> int:
        return 2 * self.phase_budget


@dataclass(frozen=True)
class Config:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    network: NetworkSection = field(default_factory=NetworkSection)
    synapse: SynapseSection = field(default_factory=SynapseSection)
    evolution: EvolutionSection = field(default_factory=EvolutionSection)
    arena: ArenaSection = field(default_factory=ArenaSection)
    robot: RobotSection = field(default_factory=RobotSection)
    trial: TrialSection = field(default_factory=TrialSection)

    def validate(self) -> "Config":
        for f in fields(self):
            getattr(self, f.name).validate()
        a, r = self.arena, self.robot
        if 2 * r.radius >= a.corridor_width:
            raise ConfigError("robot.radius too large for arena.corridor_width")
        if 2 * r.radius >= a.arm_top - a.arm_bottom:
            raise ConfigError("robot.radius too large for the arm height")
        return self

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            sec = dataclasses.asdict(getattr(self, f.name))
            for k, v in sec.items():
                if isinstance(v, tuple):
                    sec[k] = list(v)
            out[f.name] = sec
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], *, partial: bool = False) -> "Config":
        """Build a config from a nested mapping.

        With ``partial=False`` every key of every section must be present.
        Unknown sections or keys are always rejected.
        """
        if not isinstance(data, Mapping):
            raise ConfigError("config document must be a mapping of sections")
        section_types = {f.name: f.default_factory for f in fields(cls)}
        unknown = sorted(set(data) - set(section_types))
        if unknown:
            raise ConfigError(f"unknown config section: {unknown[0]}")
        sections = {}
        for name, factory in section_types.items():
            default = factory()
            raw = data.get(name)
            if raw is None:
                if not partial:
                    raise ConfigError(f"missing config section: {name}")
                raw = {}
            if not isinstance(raw, Mapping):
                raise ConfigError(f"config section {name} must be a mapping")
            sections[name] = _build_section(name, default, raw, partial)
        return cls(**sections).validate()

    def with_overrides(self, overrides: Mapping[str, Any]) -> "Config":
        data = self.to_dict()
        for dotted, value in overrides.items():
            if "." not in dotted:
                raise ConfigError(f"override key must be section.key, got {dotted!r}")
            sec, key = dotted.split(".", 1)
            if sec not in data:
                raise ConfigError(f"unknown config section: {sec}")
            if key not in data[sec]:
                raise ConfigError(f"unknown config key: {dotted}")
            data[sec][key] = value
        return Config.from_dict(data)


def _build_section(name, default, raw, partial):
    known = {f.name: f for f in fields(default)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown config key: {name}.{unknown[0]}")
    values = {}
    for key in known:
        if key not in raw:
            if not partial:
                raise ConfigError(f"missing config key: {name}.{key}")
            continue
        values[key] = _coerce(f"{name}.{key}", getattr(default, key), raw[key])
    return dataclasses.replace(default, **values)


def _coerce(key, default, value):
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{key} must be a boolean")
    if isinstance(default, int):
        if isinstance(value, bool):
            raise ConfigError(f"{key} must be an integer")
        if isinstance(value, str):
            try:
                value = int(value)
            except ValueError:
                raise ConfigError(f"{key} must be an integer, got {value!r}") from None
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool):
            raise ConfigError(f"{key} must be a number")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number, got {value!r}") from None
    if isinstance(default, tuple):
        if isinstance(value, str):
            value = [v for v in value.split(",") if v.strip()]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key} must be a list")
        try:
            return tuple(float(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a list of numbers") from None
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string")
        return value
    raise ConfigError(f"{key}: unsupported type")  # pragma: no cover


def _positive(section, *names):
    for n in names:
        if not getattr(section, n) > 0:
            raise ConfigError(f"{_section_name(section)}.{n} must be > 0")


def _section_name(section):
    return type(section).__name__.replace("Section", "").lower()


def load_config(path) -> Config:
    """Read a complete YAML or JSON config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if data is None:
        raise ConfigError(f"empty config file {path}")
    return Config.from_dict(data)


DEFAULT_CONFIG = Config()
