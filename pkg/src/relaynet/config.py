"""Experiment configuration, named profiles and validation."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .agent import EpsilonSchedule, RewardParams


class ConfigError(ValueError):
    pass


class UnknownKeyError(ConfigError):
    pass


class RangeError(ConfigError):
    pass


class MissingFieldError(ConfigError):
    pass


POLICIES = ("learned", "random", "always_max")
REWARD_SIGNALS = ("goodput", "phi")
MOBILITY = ("random_walk", "uniform")
ORDERS = ("act_move", "move_act")

# Distance units per metre in the scaled profiles. At 1:1 a density of
# 8e-3 nodes/m^2 leaves ~0.2 relays inside a radius-3 disk and no network can
# form; at 0.13 the 80-relay region is 13 x 13 units with ~13 relays per disk.
UNIT_SCALE = 0.13


@dataclass
class ExperimentConfig:
    # region and population; lengths are abstract distance units
    width: float = 13.0
    height: float = 13.0
    density: float = 8e-3 / UNIT_SCALE ** 2
    n_sources: int = 2
    terminals_per_source: int = 1
    source_x: float = 0.05
    terminal_x: float = 0.95
    max_radius: float = 3.0
    link_throughput: float = 910.0
    # episode loop
    horizon: int = 150
    episodes: int = 20
    policy: str = "learned"
    mobility: str = "random_walk"
    walk_sigma: float = 0.01  # per-step displacement std, as a fraction of width
    step_order: str = "act_move"
    window_start: int = 100
    window_end: int = 150
    # learning
    gamma: float = 0.7
    u: float = 5.0
    omega: float = 0.8
    eta: float = 20.0
    reward_divisor: float = 10.0
    state_divisor: float = 100.0
    eps_start: float = 1.0
    eps_end: float = 0.01
    eps_decay_steps: int = 100
    sync_interval: int = 100
    lr: float = 0.01
    rms_decay: float = 0.9
    rms_eps: float = 1e-8
    hidden: int = 32
    # throughput value broadcast to the relays: goodput in Mbps, or phi in [0, 1]
    reward_signal: str = "goodput"
    # plumbing
    seed: int = 0
    n_jobs: int = 1
    record_snapshots: bool = False
    profile: str = field(default="default", compare=False)

    @property
    def reward_params(self) -> RewardParams:
        return RewardParams(self.u, self.omega, self.eta, self.reward_divisor)

    @property
    def epsilon_schedule(self) -> EpsilonSchedule:
        if self.policy == "random":
            return EpsilonSchedule(1.0, 1.0, 1)
        return EpsilonSchedule(self.eps_start, self.eps_end, self.eps_decay_steps)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def validate(self) -> "ExperimentConfig":
        return validate_config(self)


def _square(area_m2: float, scale: float = UNIT_SCALE) -> dict[str, Any]:
    side = round(area_m2 ** 0.5 * scale, 9)
    return {"width": side, "height": side, "density": 8e-3 / scale ** 2}


# Every profile keeps 8e-3 relays per square metre, so the expected relay
# count is 8e-3 * area_m2 (51.2, 80, 320, 720, 1280).
PROFILES: dict[str, dict[str, Any]] = {
    "default": _square(1.0e4),
    "unscaled": _square(1.0e4, scale=1.0),
    "area-6.4e3": _square(6.4e3),
    "area-1e4": _square(1.0e4),
    "area-4e4": _square(4.0e4),
    "area-9e4": _square(9.0e4),
    "area-1.6e5": _square(1.6e5),
}

FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def from_profile(name: str = "default", **overrides) -> ExperimentConfig:
    if name not in PROFILES:
        raise UnknownKeyError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    return validate_config(ExperimentConfig(profile=name, **{**PROFILES[name], **overrides}))


def _range(name, value, lo=None, hi=None, lo_open=False, hi_open=False):
    bad = ((lo is not None and (value <= lo if lo_open else value < lo))
           or (hi is not None and (value >= hi if hi_open else value > hi)))
    if bad:
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        raise RangeError(f"{name}={value} outside {lb}{lo if lo is not None else '-inf'}, "
                         f"{hi if hi is not None else 'inf'}{rb}")


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    for name in ("width", "height"):
        if getattr(cfg, name) is None:
            raise MissingFieldError(f"region field {name!r} is missing")
    _range("width", cfg.width, 0, lo_open=True)
    _range("height", cfg.height, 0, lo_open=True)
    _range("density", cfg.density, 0)
    _range("n_sources", cfg.n_sources, 1)
    _range("terminals_per_source", cfg.terminals_per_source, 1)
    _range("source_x", cfg.source_x, 0, 1)
    _range("terminal_x", cfg.terminal_x, 0, 1)
    _range("max_radius", cfg.max_radius, 0, lo_open=True)
    _range("link_throughput", cfg.link_throughput, 0, lo_open=True)
    _range("horizon", cfg.horizon, 2)
    _range("episodes", cfg.episodes, 1)
    _range("walk_sigma", cfg.walk_sigma, 0)
    _range("window_start", cfg.window_start, 1, cfg.horizon)
    _range("window_end", cfg.window_end, cfg.window_start, cfg.horizon)
    _range("gamma", cfg.gamma, 0, 1, hi_open=True)
    _range("omega", cfg.omega, 0, 1)
    _range("reward_divisor", cfg.reward_divisor, 0, lo_open=True)
    _range("state_divisor", cfg.state_divisor, 0, lo_open=True)
    _range("eps_start", cfg.eps_start, 0, 1)
    _range("eps_end", cfg.eps_end, 0, 1)
    _range("eps_decay_steps", cfg.eps_decay_steps, 1)
    _range("sync_interval", cfg.sync_interval, 1)
    _range("lr", cfg.lr, 0, lo_open=True)
    _range("rms_decay", cfg.rms_decay, 0, 1, hi_open=True)
    _range("rms_eps", cfg.rms_eps, 0, lo_open=True)
    _range("hidden", cfg.hidden, 1)
    _range("n_jobs", cfg.n_jobs, 1)
    for name, allowed in (("policy", POLICIES), ("mobility", MOBILITY), ("step_order", ORDERS),
                          ("reward_signal", REWARD_SIGNALS)):
        if getattr(cfg, name) not in allowed:
            raise RangeError(f"{name}={getattr(cfg, name)!r} not one of {allowed}")
    return cfg


def coerce(key: str, raw: str) -> Any:
    """Convert a textual value to the type of config field ``key``."""
    if key not in FIELD_TYPES:
        raise UnknownKeyError(f"unknown config key {key!r}")
    raw = raw.strip()
    if raw == "":
        raise MissingFieldError(f"config key {key!r} has no value")
    kind = FIELD_TYPES[key]
    try:
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise RangeError(f"{key}={raw!r} is not a valid {kind}") from None
    return raw


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, Any] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        values[key] = coerce(key, raw)
    return values


def write_config_file(cfg: ExperimentConfig, path: str | Path) -> None:
    lines = [f"{k} = {v}" for k, v in cfg.to_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


def resolve(file_values: Mapping[str, Any] | None = None,
            overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    """Profile defaults < config file < explicit overrides."""
    merged = {**(file_values or {}), **(overrides or {})}
    profile = merged.pop("profile", "default")
    for key in merged:
        if key not in FIELD_TYPES:
            raise UnknownKeyError(f"unknown config key {key!r}")
    horizon = merged.get("horizon")
    if horizon is not None and not {"window_start", "window_end"} & merged.keys():
        # shrink the averaging window to fit a short run
        defaults = ExperimentConfig()
        if horizon < defaults.window_end:
            merged["window_end"] = horizon
            merged["window_start"] = min(defaults.window_start, max(1, 2 * horizon // 3))
    return from_profile(profile, **merged)
