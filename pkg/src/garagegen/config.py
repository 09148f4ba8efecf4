"""Run configuration: one YAML file with env/reward/train/metrics/sim sections."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .dqn import TrainConfig
from .env import EnvConfig
from .grid import Axis, EncodingMatrix, parse_initial_map
from .maps import BUNDLED, load_map
from .metrics import RANGE_PRESETS, MetricsConfig
from .reward import RewardParams
from .sim import SimConfig


class ConfigError(ValueError):
    pass


ENV_KEYS = ("visibility_k", "max_error", "max_steps", "axis_policy", "fixed_axis")
WEIGHT_TABLES = ("length_weights", "intersection_weights")


@dataclass
class MetricsSection:
    preset: str = "text"
    w1: float = 0.33
    w2: float = 0.67

    def __post_init__(self) -> None:
        if self.preset not in RANGE_PRESETS:
            raise ConfigError(f"unknown range preset {self.preset!r}")

    def build(self) -> MetricsConfig:
        return MetricsConfig.preset(self.preset, self.w1, self.w2)


@dataclass
class RunConfig:
    map: str = "garage_11x7"
    output: str = "runs/default"
    env: dict[str, Any] = field(default_factory=dict)
    reward: RewardParams = field(default_factory=RewardParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    sim: SimConfig = field(default_factory=SimConfig)
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    def env_config(self) -> EnvConfig:
        return EnvConfig(reward=self.reward, seed=self.train.seed, **self.env)

    def load_initial(self) -> EncodingMatrix:
        if self.map in BUNDLED:
            return load_map(self.map)
        return parse_initial_map(self.map_path().read_text())

    def map_path(self) -> Path:
        p = Path(self.map)
        return p if p.is_absolute() else self.base_dir / p

    def output_dir(self) -> Path:
        p = Path(self.output)
        return p if p.is_absolute() else self.base_dir / p

    def to_dict(self) -> dict[str, Any]:
        reward = dataclasses.asdict(self.reward)
        for key in WEIGHT_TABLES:
            reward[key] = [f"{k}:{v!r}" for k, v in sorted(reward[key].items())]
        env = dict(self.env)
        if isinstance(env.get("fixed_axis"), Axis):
            env["fixed_axis"] = env["fixed_axis"].value
        return {
            "map": self.map,
            "output": self.output,
            "env": env,
            "reward": reward,
            "train": dataclasses.asdict(self.train),
            "metrics": dataclasses.asdict(self.metrics),
            "sim": dataclasses.asdict(self.sim),
        }

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _parse_table(value: Any, key: str) -> dict[int, float]:
    if isinstance(value, dict):
        return {int(k): float(v) for k, v in value.items()}
    if isinstance(value, str):
        value = value.replace(",", " ").split()
    out = {}
    for item in value:
        try:
            k, v = str(item).split(":")
            out[int(k)] = float(v)
        except ValueError as exc:
            raise ConfigError(f"reward.{key}: expected 'length:weight' pairs, got {item!r}") from exc
    return out


def _section(cls, data: dict[str, Any], name: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def from_dict(data: dict[str, Any], base_dir: Path = Path("."), check_paths: bool = True) -> RunConfig:
    data = dict(data or {})
    allowed = {"map", "output", "env", "reward", "train", "metrics", "sim"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    env = dict(data.get("env") or {})
    bad_env = set(env) - set(ENV_KEYS)
    if bad_env:
        raise ConfigError(f"unknown key(s) in [env]: {', '.join(sorted(bad_env))}")
    reward = dict(data.get("reward") or {})
    for key in WEIGHT_TABLES:
        if key in reward:
            reward[key] = _parse_table(reward[key], key)
    cfg = RunConfig(
        map=str(data.get("map", RunConfig.map)),
        output=str(data.get("output", RunConfig.output)),
        env=env,
        reward=_section(RewardParams, reward, "reward"),
        train=_section(TrainConfig, dict(data.get("train") or {}), "train"),
        metrics=_section(MetricsSection, dict(data.get("metrics") or {}), "metrics"),
        sim=_section(SimConfig, dict(data.get("sim") or {}), "sim"),
        base_dir=base_dir,
    )
    try:
        cfg.env_config()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[env]: {exc}") from exc
    if check_paths and cfg.map not in BUNDLED and not cfg.map_path().exists():
        raise ConfigError(f"map file {cfg.map_path()} does not exist")
    return cfg


def apply_override(data: dict[str, Any], assignment: str) -> None:
    """Apply ``section.key=value`` (value parsed as YAML) to a raw config dict."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form section.key=value")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {assignment!r} descends into a scalar")
    node[keys[-1]] = yaml.safe_load(raw)


def load_config(path: str | Path | None, overrides: list[str] = (), check_paths: bool = True) -> RunConfig:
    data: dict[str, Any] = {}
    base = Path(".")
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        try:
            data = yaml.safe_load(p.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{p}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{p}: top level must be a mapping")
        base = p.parent
    for item in overrides:
        apply_override(data, item)
    seed = os.environ.get("GF_SEED")
    if seed is not None:
        try:
            s = int(seed)
        except ValueError as exc:
            raise ConfigError(f"GF_SEED={seed!r} is not an integer") from exc
        data.setdefault("train", {})["seed"] = s
        data.setdefault("sim", {})["seed"] = s
    return from_dict(data, base, check_paths)
