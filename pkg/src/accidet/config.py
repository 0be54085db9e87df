"""Run configuration file: optional ``rules``, ``pipeline``, ``kinematics``, ``stats`` and ``lanes`` sections.

Example (YAML)::

    rules:
      rule4_comparator: leq
    pipeline:
      rba_min_frames: 3
    kinematics:
      speed_half_window: 3
    stats:
      distance_bin_m: 10
    lanes: my_lanes.yaml

A missing file argument falls back to the ``ACCID_CONFIG`` environment
variable, then to built-in defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .digital_twin import KinematicsConfig
from .event_pipeline import PipelineConfig
from .reporting import StatsConfig
from .rule_engine import ConfigError, RuleConfig

ENV_VAR = "ACCID_CONFIG"
SECTIONS = ("rules", "pipeline", "kinematics", "stats", "lanes")


@dataclass(frozen=True)
class AppConfig:
    rules: RuleConfig = field(default_factory=RuleConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    stats: StatsConfig = field(default_factory=StatsConfig)
    lanes: str | None = None
    source: str | None = None


def config_path(explicit: str | Path | None = None) -> Path | None:
    if explicit:
        return Path(explicit)
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else None


def from_dict(data: dict[str, Any] | None, source: str | None = None) -> AppConfig:
    data = dict(data or {})
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    try:
        rules = RuleConfig.from_dict(data.get("rules"))
        pipe = dict(data.get("pipeline") or {})
        if "kinematics" in data:
            pipe["kinematics"] = {**(pipe.get("kinematics") or {}), **(data["kinematics"] or {})}
        pipeline = PipelineConfig.from_dict(pipe)
        stats = StatsConfig(**{k: tuple(v) if k == "sensor_origin" and v is not None else v
                               for k, v in (data.get("stats") or {}).items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    stats = replace(stats, rules=rules, kinematics=pipeline.kinematics)
    lanes = data.get("lanes")
    if lanes is not None and source is not None and lanes != "default":
        lanes = str((Path(source).parent / lanes))
    return AppConfig(rules, pipeline, stats, lanes, source)


def load_config(path: str | Path | None = None) -> AppConfig:
    p = config_path(path)
    if p is None:
        return AppConfig()
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: not valid YAML/JSON ({exc})") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return from_dict(data, str(p))


__all__ = ["AppConfig", "ConfigError", "ENV_VAR", "KinematicsConfig", "load_config", "from_dict"]
