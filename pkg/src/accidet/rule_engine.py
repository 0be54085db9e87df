"""Accident rules, maneuver flags and scenario labels.

The six accident predicates for a vehicle ``i`` with lead vehicle ``lead``:

    r1  v_i >= v_min                         (15 km/h by default)
    r2  v_i > v_lead
    r3  v_i >= v_j for every same-lane vehicle j ahead of i
    r4  d_lead >= d_thresh                   (comparator configurable)
    r5  d_lead < ((v_i - v_lead) / 30) ** 2  (velocity in km/h by default)
    r6  TTC_lead <= TTC_thresh

A vehicle is an accident candidate when all six hold in the same frame.
Vehicles without a lead get r2..r6 = False.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from . import kernels
from .digital_twin import FrameSnapshot, KinematicsConfig, Track
from .lane_model import VEHICLE_CATEGORIES, LaneMap, frame_leads

KMH = 3.6

SCENARIO_STANDING_IN_LANE = "standing_in_driving_lane"
SCENARIO_BREAKDOWN = "breakdown_shoulder"
MANEUVERS = ("hard_decel", "heading_swerve", "standing", "speeding", "tailgating")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RuleConfig:
    v_min_mps: float = 15 / 3.6
    d_thresh_m: float = 2.0
    ttc_thresh_s: float = 1.5
    decel_thresh_mps2: float = 5.0
    heading_dev_deg: float = 30.0
    heading_window_frames: int = 12
    standing_speed_kmh: float = 2.0
    standing_duration_s: float = 5.0
    speed_limit_south_kmh: float | None = 120.0
    speed_limit_north_kmh: float | None = None
    gap_rule_velocity_units: str = "kmh"
    rule4_comparator: str = "geq"
    tailgate_duration_s: float = 1.0
    vehicles_only: bool = True

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or value is None or isinstance(value, str):
                continue
            if not value > 0:
                raise ConfigError(f"{f.name} must be positive, got {value}")
        if self.gap_rule_velocity_units not in ("kmh", "mps"):
            raise ConfigError("gap_rule_velocity_units must be 'kmh' or 'mps'")
        if self.rule4_comparator not in ("geq", "leq"):
            raise ConfigError("rule4_comparator must be 'geq' or 'leq'")

    @property
    def unit_factor(self) -> float:
        return KMH if self.gap_rule_velocity_units == "kmh" else 1.0

    def speed_limit_kmh(self, lane_id: int | None) -> float | None:
        if lane_id is None:
            return None
        return self.speed_limit_north_kmh if lane_id > 0 else self.speed_limit_south_kmh

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None) -> "RuleConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown rule config field(s): {', '.join(sorted(unknown))}")
        return cls(**data)


def load_rule_config(source: str | Path | None = None) -> RuleConfig:
    """Read a rule config file (YAML/JSON). A top-level ``rules`` key is optional."""
    if source is None or str(source) == "default":
        return RuleConfig()
    data = yaml.safe_load(Path(source).read_text()) or {}
    if "rules" in data:
        data = data["rules"]
    return RuleConfig.from_dict(data)


@dataclass(frozen=True)
class RuleVector:
    r1: bool = False
    r2: bool = False
    r3: bool = False
    r4: bool = False
    r5: bool = False
    r6: bool = False
    hard_decel: bool = False
    heading_swerve: bool = False
    standing: bool = False
    speeding: bool = False
    tailgating: bool = False
    lead_id: str | None = None
    gap_m: float | None = None
    ttc_s: float | None = None

    @property
    def accident_candidate(self) -> bool:
        return self.r1 and self.r2 and self.r3 and self.r4 and self.r5 and self.r6

    @property
    def rules(self) -> tuple[bool, ...]:
        return (self.r1, self.r2, self.r3, self.r4, self.r5, self.r6)


def ttc(gap_m: float, v_follower_mps: float, v_lead_mps: float) -> float:
    """Time to collision at constant speeds; +inf when not closing."""
    if gap_m < 0:
        raise ValueError("gap must be >= 0")
    closing = v_follower_mps - v_lead_mps
    if closing > 0:
        return gap_m / closing
    return math.inf


def rule_matrix(speed, lead_speed, gap, has_lead, ahead_max, config: RuleConfig):
    """Vectorised r1..r6 (shape (n, 6)) and TTC for columnar inputs."""
    return kernels.rule_predicates(
        np.ascontiguousarray(speed, dtype=float),
        np.ascontiguousarray(lead_speed, dtype=float),
        np.ascontiguousarray(gap, dtype=float),
        np.ascontiguousarray(has_lead, dtype=np.bool_),
        np.ascontiguousarray(ahead_max, dtype=float),
        float(config.v_min_mps), float(config.d_thresh_m), float(config.ttc_thresh_s),
        float(config.unit_factor), config.rule4_comparator == "geq",
    )


def evaluate_rules(frame: FrameSnapshot, lane_map: LaneMap, config: RuleConfig | None = None,
                   sensor_id: str | None = None) -> dict[str, RuleVector]:
    """r1..r6 for every object in one sensor's view of a frame.

    Objects must carry ``speed_mps``; missing speeds make every rule False.
    Non-vehicle categories are exempt (all False) unless
    ``config.vehicles_only`` is off.
    """
    config = config or RuleConfig()
    sensors = frame.sensors()
    if sensor_id is None:
        if len(sensors) > 1:
            raise ValueError("frame holds several sensors; pass sensor_id")
        sensor_id = sensors[0] if sensors else None
    objects, _, _, lead, gap, ahead = frame_leads(frame, lane_map, config.vehicles_only, sensor_id)
    speed = np.array([np.nan if o.speed_mps is None else o.speed_mps for o in objects], dtype=float)
    has_lead = lead >= 0
    lead_speed = np.where(has_lead, speed[np.maximum(lead, 0)], np.nan) if len(objects) else speed
    rules, ttcs = rule_matrix(speed, lead_speed, gap, has_lead, ahead, config)
    out = {}
    for i, o in enumerate(objects):
        if config.vehicles_only and o.category not in VEHICLE_CATEGORIES:
            out[o.track_id] = RuleVector()
            continue
        r = rules[i] if o.speed_mps is not None else (False,) * 6
        out[o.track_id] = RuleVector(
            *map(bool, r),
            lead_id=objects[lead[i]].track_id if has_lead[i] else None,
            gap_m=float(gap[i]) if has_lead[i] else None,
            ttc_s=float(ttcs[i]) if has_lead[i] else None,
        )
    return out


def maneuver_arrays(speed, accel, heading, t, offsets, lane_ids, ttc_arr, r5,
                    config: RuleConfig, standing_speed=None) -> dict[str, np.ndarray]:
    """Per-state maneuver flags over concatenated tracks (see ``classify_maneuvers``).

    ``lane_ids`` uses 0 for off-road states; ``ttc_arr`` is +inf without a lead.
    ``standing_speed`` (default ``speed``) feeds the standing test only.
    """
    if standing_speed is None:
        standing_speed = speed
    dev = kernels.heading_deviation(heading, offsets, int(config.heading_window_frames))
    with np.errstate(invalid="ignore"):
        hard = accel <= -config.decel_thresh_mps2
        swerve = dev > config.heading_dev_deg
        slow = standing_speed < config.standing_speed_kmh / KMH
        limit = np.full(speed.shape, np.inf)
        if config.speed_limit_north_kmh is not None:
            limit[lane_ids > 0] = config.speed_limit_north_kmh
        if config.speed_limit_south_kmh is not None:
            limit[lane_ids < 0] = config.speed_limit_south_kmh
        speeding = speed * KMH > limit
        close = (ttc_arr <= config.ttc_thresh_s) & ~r5
    standing = kernels.sustained(np.ascontiguousarray(slow), t, offsets,
                                 float(config.standing_duration_s))
    tailgating = kernels.sustained(np.ascontiguousarray(close), t, offsets,
                                   float(config.tailgate_duration_s))
    return {
        "hard_decel": hard,
        "heading_swerve": swerve,
        "standing": standing,
        "speeding": speeding,
        "tailgating": tailgating,
        "heading_deviation": dev,
    }


def classify_maneuvers(track: Track, lane_ids=None, config: RuleConfig | None = None,
                       kinematics: KinematicsConfig | None = None, ttc_s=None,
                       r5=None) -> dict[str, np.ndarray]:
    """Maneuver flags for every state of one track.

    hard_decel: acceleration <= -decel_thresh; heading_swerve: heading
    deviation over ``heading_window_frames`` above ``heading_dev_deg``;
    standing: below ``standing_speed_kmh`` continuously for
    ``standing_duration_s``; speeding: above the limit of the lane's
    direction; tailgating: TTC <= ``ttc_thresh_s`` without r5, sustained for
    ``tailgate_duration_s``. ``lane_ids``, ``ttc_s`` and ``r5`` are optional
    per-state sequences.
    """
    config = config or RuleConfig()
    n = len(track.states)
    kin = track.kinematics(kinematics)
    lanes = np.array([0 if v is None else v for v in (lane_ids if lane_ids is not None
                                                       else [s.lane_id for s in track.states])],
                     dtype=np.int64)
    ttc_arr = np.full(n, np.inf) if ttc_s is None else np.asarray(
        [math.inf if v is None else v for v in ttc_s], dtype=float)
    r5_arr = np.zeros(n, dtype=bool) if r5 is None else np.asarray(r5, dtype=bool)
    offsets = np.array([0, n], dtype=np.int64)
    flags = maneuver_arrays(kin.speed, kin.acceleration, kin.heading, track.timestamps, offsets,
                            lanes, ttc_arr, r5_arr, config, kin.standing_speed)
    flags.pop("heading_deviation")
    if config.vehicles_only and track.category not in VEHICLE_CATEGORIES:
        flags = {k: np.zeros(n, dtype=bool) for k in flags}
    return flags


def classify_scenario(standing: bool, lane_kind: str | None) -> str | None:
    """Scenario label for a standing vehicle by lane kind; None when moving or off-road."""
    if not standing or lane_kind is None:
        return None
    if lane_kind == "shoulder":
        return SCENARIO_BREAKDOWN
    return SCENARIO_STANDING_IN_LANE
