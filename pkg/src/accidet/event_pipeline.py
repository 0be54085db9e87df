"""From per-frame rule candidates and detector output to confirmed events.

Chain run by ``run_pipeline``: kinematics -> lanes -> leads -> rules and
maneuver flags -> detector queries on frames holding a rule candidate ->
temporal confirmation per sensor -> detector validation -> cross-camera
fusion. All per-state work runs on columnar arrays through ``kernels``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import zlib
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Protocol, Sequence

import numpy as np

from . import kernels
from .digital_twin import DuplicateStateError, FrameSnapshot, KinematicsConfig, kinematics_arrays
from .lane_model import VEHICLE_CATEGORIES, LaneMap
from .rule_engine import (
    MANEUVERS,
    RuleConfig,
    RuleVector,
    classify_scenario,
    maneuver_arrays,
    rule_matrix,
)

logger = logging.getLogger(__name__)

EVENT_KINDS = ("accident", "breakdown_shoulder", "standing_in_driving_lane", "speeding",
               "tailgating", "hard_decel", "heading_swerve")
SOURCES = ("rule_based", "learning_based", "fused")
DETECTION_CLASSES = ("accident", "overturned", "fire", "normal")
ACCIDENT_CLASSES = frozenset({"accident", "overturned", "fire"})


@dataclass(frozen=True)
class ExternalDetection:
    sensor_id: str
    frame_index: int
    class_label: str
    confidence: float
    ground_position: tuple[float, float] | None = None
    box2d: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.class_label not in DETECTION_CLASSES:
            raise ValueError(f"unknown detection class {self.class_label!r}")


@dataclass(frozen=True)
class DetectionEvent:
    kind: str
    track_ids: tuple[str, ...]
    frame_span: tuple[int, int]
    confidence: float
    source: str
    location: tuple[float, float]
    sensors: tuple[str, ...] = ()
    event_id: str = ""

    def __post_init__(self):
        if self.frame_span[0] > self.frame_span[1]:
            raise ValueError(f"empty frame span {self.frame_span}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.source == "fused" and len(set(self.sensors)) < 2:
            raise ValueError("fused events need at least two sensors")

    @property
    def onset(self) -> int:
        return self.frame_span[0]

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["track_ids"] = list(self.track_ids)
        d["frame_span"] = list(self.frame_span)
        d["location"] = [round(self.location[0], 6) + 0.0, round(self.location[1], 6) + 0.0]
        d["sensors"] = list(self.sensors)
        d["confidence"] = round(self.confidence, 6)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "DetectionEvent":
        return cls(
            kind=d["kind"],
            track_ids=tuple(str(t) for t in d.get("track_ids", ())),
            frame_span=(int(d["frame_span"][0]), int(d["frame_span"][1])),
            confidence=float(d.get("confidence", 1.0)),
            source=d.get("source", "rule_based"),
            location=tuple(float(v) for v in d.get("location", (0.0, 0.0))),
            sensors=tuple(d.get("sensors", ())),
            event_id=str(d.get("event_id", "")),
        )


def events_to_json(events: Sequence[DetectionEvent]) -> str:
    return json.dumps({"events": [e.to_dict() for e in events]}, indent=2, sort_keys=True) + "\n"


def load_events(path: str | Path) -> list[DetectionEvent]:
    data = json.loads(Path(path).read_text())
    return [DetectionEvent.from_dict(d) for d in data["events"]]


# ------------------------------------------------------------ confirmation


@dataclass(frozen=True)
class Candidate:
    """One per-frame indication that ``key`` on ``sensor_id`` may be an event."""

    frame_index: int
    sensor_id: str
    kind: str
    key: Any
    confidence: float
    source: str = "rule_based"
    track_ids: tuple[str, ...] = ()
    location: tuple[float, float] = (0.0, 0.0)


def confirm(candidates: Iterable[Candidate], min_frames: int = 3, min_confidence: float = 0.8,
            gap_frames: int = 5) -> list[DetectionEvent]:
    """Temporal confirmation, independently per (sensor, kind, key, source).

    A frame is a hit when its confidence exceeds ``min_confidence``. Hits
    chain while fewer than ``gap_frames`` frames pass without one; a chain
    becomes an event once it holds ``min_frames`` consecutive hit frames, and
    the event spans the whole chain. Confidence is the chain maximum.
    """
    streams: dict[tuple, list[Candidate]] = defaultdict(list)
    for c in candidates:
        streams[(c.sensor_id, c.kind, c.key, c.source)].append(c)

    events: list[DetectionEvent] = []
    for (sensor, kind, _, source), cands in streams.items():
        per_frame: dict[int, list[Candidate]] = {}
        for c in sorted(cands, key=lambda c: c.frame_index):
            if c.confidence > min_confidence:
                per_frame.setdefault(c.frame_index, []).append(c)

        chain: list[int] = []
        run = 0
        opened = False

        def close():
            if opened:
                hits = [c for f in chain for c in per_frame[f]]
                ids = sorted({t for c in hits for t in c.track_ids})
                events.append(DetectionEvent(
                    kind=kind,
                    track_ids=tuple(ids),
                    frame_span=(chain[0], chain[-1]),
                    confidence=max(c.confidence for c in hits),
                    source=source,
                    location=per_frame[chain[0]][0].location,
                    sensors=(sensor,),
                ))

        for f in per_frame:
            if chain and f - chain[-1] > gap_frames:
                close()
                chain, run, opened = [], 0, False
            run = run + 1 if chain and f == chain[-1] + 1 else 1
            chain.append(f)
            if run >= min_frames:
                opened = True
        close()
    return events


# ------------------------------------------------------------------ fusion


def fuse_cameras(events: Mapping[str, Sequence[DetectionEvent]] | Sequence[DetectionEvent],
                 radius_m: float = 5.0, window_frames: int = 12) -> list[DetectionEvent]:
    """Merge same-kind events seen by different sensors.

    An event joins a cluster only when its onset is within ``window_frames``
    and ``radius_m`` of every member and the cluster has no event from its
    sensor yet. Singletons pass through unchanged.
    """
    if isinstance(events, Mapping):
        flat = [e for sensor in sorted(events) for e in events[sensor]]
    else:
        flat = list(events)
    flat.sort(key=lambda e: (e.onset, e.kind, e.sensors, e.track_ids, e.frame_span[1]))

    clusters: list[list[DetectionEvent]] = []
    for ev in flat:
        for cluster in clusters:
            if cluster[0].kind != ev.kind:
                continue
            taken = {s for m in cluster for s in m.sensors}
            if taken & set(ev.sensors):
                continue
            if all(abs(m.onset - ev.onset) <= window_frames
                   and math.dist(m.location, ev.location) <= radius_m for m in cluster):
                cluster.append(ev)
                break
        else:
            clusters.append([ev])

    out = []
    for cluster in clusters:
        if len(cluster) == 1:
            out.append(cluster[0])
            continue
        first = min(cluster, key=lambda e: (e.onset, -e.confidence))
        out.append(DetectionEvent(
            kind=first.kind,
            track_ids=tuple(sorted({t for e in cluster for t in e.track_ids})),
            frame_span=(min(e.frame_span[0] for e in cluster), max(e.frame_span[1] for e in cluster)),
            confidence=max(e.confidence for e in cluster),
            source="fused",
            location=first.location,
            sensors=tuple(sorted({s for e in cluster for s in e.sensors})),
        ))
    return out


# --------------------------------------------------------------- detectors


class Detector(Protocol):
    def detect(self, frame: FrameSnapshot, sensor_id: str) -> list[ExternalDetection]:
        ...


class GroundTruthStub:
    """Deterministic stand-in for an image detector, driven by scenario truth.

    Reports ``class_label`` at the truth onset for every truth event of a
    listed kind whose span covers the frame. Confidence is ``confidence``
    plus optional Gaussian noise, seeded per (frame, sensor, event).
    """

    def __init__(self, truth, confidence: float = 0.9, noise: float = 0.0, seed: int = 0,
                 kinds: Sequence[str] = ("accident",), class_label: str = "accident"):
        self.events = [e for e in truth.events if e.kind in kinds]
        self.confidence = confidence
        self.noise = noise
        self.seed = seed
        self.class_label = class_label
        self.queries: list[tuple[int, str]] = []

    def detect(self, frame: FrameSnapshot, sensor_id: str) -> list[ExternalDetection]:
        self.queries.append((frame.frame_index, sensor_id))
        out = []
        for k, ev in enumerate(self.events):
            if not ev.frame_span[0] <= frame.frame_index <= ev.frame_span[1]:
                continue
            conf = self.confidence
            if self.noise > 0:
                rng = np.random.default_rng(
                    [self.seed, frame.frame_index, zlib.crc32(sensor_id.encode()), k])
                conf = conf + self.noise * rng.standard_normal()
            out.append(ExternalDetection(sensor_id, frame.frame_index, self.class_label,
                                         float(min(max(conf, 0.0), 1.0)),
                                         tuple(ev.onset)))
        return out


class ReplayDetector:
    """Serves pre-computed detections from a replay file."""

    def __init__(self, detections: Iterable[ExternalDetection]):
        self._by_frame: dict[tuple[int, str], list[ExternalDetection]] = defaultdict(list)
        for d in detections:
            self._by_frame[(d.frame_index, d.sensor_id)].append(d)

    def detect(self, frame: FrameSnapshot, sensor_id: str) -> list[ExternalDetection]:
        return list(self._by_frame.get((frame.frame_index, sensor_id), ()))

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayDetector":
        return cls(load_detections(path))


def load_detections(path: str | Path) -> list[ExternalDetection]:
    """Replay file: ``{"detections": [{frame_index, sensor_id, class, confidence, x, y}]}``."""
    data = json.loads(Path(path).read_text())
    out = []
    for rec in data["detections"]:
        pos = None
        if rec.get("x") is not None and rec.get("y") is not None:
            pos = (float(rec["x"]), float(rec["y"]))
        out.append(ExternalDetection(str(rec["sensor_id"]), int(rec["frame_index"]),
                                     str(rec["class"]), float(rec["confidence"]), pos))
    return out


def dump_detections(detections: Iterable[ExternalDetection], path: str | Path) -> None:
    recs = [{"frame_index": d.frame_index, "sensor_id": d.sensor_id, "class": d.class_label,
             "confidence": d.confidence,
             "x": None if d.ground_position is None else d.ground_position[0],
             "y": None if d.ground_position is None else d.ground_position[1]}
            for d in detections]
    Path(path).write_text(json.dumps({"detections": recs}, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class PipelineConfig:
    min_frames: int = 3
    min_confidence: float = 0.8
    gap_frames: int = 5
    rba_min_frames: int = 1
    fuse_radius_m: float = 5.0
    fuse_window_frames: int = 12
    assoc_radius_m: float = 3.0
    maneuver_events: bool = True
    kinematics: KinematicsConfig = field(default_factory=KinematicsConfig)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None) -> "PipelineConfig":
        data = dict(data or {})
        kin = data.pop("kinematics", None)
        known = {f for f in cls.__dataclass_fields__ if f != "kinematics"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown pipeline config field(s): {', '.join(sorted(unknown))}")
        if kin is not None:
            data["kinematics"] = KinematicsConfig(**kin)
        return cls(**data)


TRACE_FLAGS = ("accident_candidate",) + MANEUVERS


@dataclass
class RuleTrace:
    """Every evaluated state of a run, in input order."""

    frame_index: np.ndarray
    sensor_id: np.ndarray
    track_id: np.ndarray
    lane_id: np.ndarray
    speed: np.ndarray
    acceleration: np.ndarray
    heading_deviation: np.ndarray
    lead_track: np.ndarray
    gap: np.ndarray
    ttc: np.ndarray
    nearest: np.ndarray
    rules: np.ndarray
    flags: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.frame_index)

    def vectors(self, frame_index: int, sensor_id: str | None = None) -> dict:
        """RuleVectors of one frame, keyed by track ID (or (sensor, track) across sensors)."""
        rows = np.nonzero(self.frame_index == frame_index)[0]
        if sensor_id is not None:
            rows = rows[self.sensor_id[rows] == sensor_id]
        multi = len(set(self.sensor_id[rows])) > 1
        out = {}
        for i in rows:
            has = self.lead_track[i] is not None
            vec = RuleVector(*map(bool, self.rules[i]),
                             **{m: bool(self.flags[m][i]) for m in MANEUVERS},
                             lead_id=self.lead_track[i],
                             gap_m=float(self.gap[i]) if has else None,
                             ttc_s=float(self.ttc[i]) if has else None)
            key = (self.sensor_id[i], self.track_id[i]) if multi else self.track_id[i]
            out[key] = vec
        return out

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frame_index", "sensor_id", "track_id", "lane_id", "speed_mps",
                        "acceleration_mps2", "heading_deviation_deg", "lead_id", "gap_m", "ttc_s",
                        "nearest_m", "r1", "r2", "r3", "r4", "r5", "r6", *TRACE_FLAGS])
            for i in range(len(self)):
                w.writerow([
                    int(self.frame_index[i]), self.sensor_id[i], self.track_id[i],
                    int(self.lane_id[i]) if self.lane_id[i] else "",
                    _fmt(self.speed[i]), _fmt(self.acceleration[i]),
                    _fmt(self.heading_deviation[i]), self.lead_track[i] or "",
                    _fmt(self.gap[i]), _fmt(self.ttc[i]), _fmt(self.nearest[i]),
                    *(int(v) for v in self.rules[i]),
                    *(int(self.flags[f][i]) for f in TRACE_FLAGS),
                ])


def _fmt(v: float) -> str:
    if v is None or not math.isfinite(v):
        return ""
    return f"{v:.6f}"


@dataclass
class PipelineResult:
    events: list[DetectionEvent]
    trace: RuleTrace
    warnings: list[str] = field(default_factory=list)
    detector_queries: int = 0


def _codes(values: list) -> tuple[np.ndarray, list]:
    uniq: dict = {}
    codes = np.fromiter((uniq.setdefault(v, len(uniq)) for v in values), dtype=np.int64,
                        count=len(values))
    return codes, list(uniq)


def _boundaries(*keys: np.ndarray) -> np.ndarray:
    n = len(keys[0])
    if n == 0:
        return np.zeros(1, dtype=np.int64)
    change = np.zeros(n, dtype=bool)
    change[0] = True
    for k in keys:
        change[1:] |= k[1:] != k[:-1]
    return np.append(np.nonzero(change)[0], n).astype(np.int64)


def run_pipeline(frames: Sequence[FrameSnapshot], lane_map: LaneMap,
                 rule_config: RuleConfig | None = None, detector: Detector | None = None,
                 config: PipelineConfig | None = None) -> PipelineResult:
    rule_config = rule_config or RuleConfig()
    config = config or PipelineConfig()
    warnings: list[str] = []

    # -- columnar view, input order
    states = [o for snap in frames for o in snap.objects]
    n = len(states)
    frame_pos = np.repeat(np.arange(len(frames), dtype=np.int64),
                          [len(snap.objects) for snap in frames])
    frame_index = np.array([o.frame_index for o in states], dtype=np.int64)
    t = np.array([o.timestamp for o in states], dtype=float)
    x = np.array([o.position[0] for o in states], dtype=float)
    y = np.array([o.position[1] for o in states], dtype=float)
    yaw = np.array([o.yaw for o in states], dtype=float)
    length = np.array([o.dimensions[0] for o in states], dtype=float)
    label = np.array([np.nan if o.label_speed_kmh is None else o.label_speed_kmh / 3.6
                      for o in states], dtype=float)
    vehicle = np.array([o.category in VEHICLE_CATEGORIES for o in states], dtype=np.bool_)
    eligible = vehicle if rule_config.vehicles_only else np.ones(n, dtype=np.bool_)
    sensor_code, sensor_names = _codes([o.sensor_id for o in states])
    track_code, track_names = _codes([o.track_id for o in states])
    track_name_arr = np.array(track_names, dtype=object)
    sensor_name_arr = np.array(sensor_names, dtype=object)

    # -- per-track order: (sensor, track, time)
    tord = np.lexsort((t, track_code, sensor_code))
    t_s = t[tord]
    toffs = _boundaries(sensor_code[tord], track_code[tord])
    same = np.ones(n, dtype=bool)
    same[toffs[:-1]] = False
    if n and np.any(same[1:] & (np.diff(t_s) <= 0)):
        i = int(np.nonzero(same[1:] & (np.diff(t_s) <= 0))[0][0]) + 1
        o = states[tord[i]]
        raise DuplicateStateError(
            f"track {o.track_id!r} on sensor {o.sensor_id!r} has two states at t={o.timestamp}")
    speed_s, heading_s, accel_s, slow_s = kinematics_arrays(
        x[tord], y[tord], t_s, yaw[tord], toffs, config.kinematics, label[tord])
    speed = np.empty(n)
    speed[tord] = speed_s
    accel = np.empty(n)
    accel[tord] = accel_s

    # -- lanes
    lane_idx, s_long, _ = lane_map.locate(x, y)
    lane_arr = lane_map.arrays
    lane_id = np.where(lane_idx >= 0, lane_arr["lane_id"][np.maximum(lane_idx, 0)], 0)
    on_shoulder = np.where(lane_idx >= 0, lane_arr["is_shoulder"][np.maximum(lane_idx, 0)], False)

    # -- per-frame order: (frame, sensor)
    gord = np.lexsort((sensor_code, frame_pos))
    goffs = _boundaries(frame_pos[gord], sensor_code[gord])
    lead_g, gap_g, ahead_g = kernels.lead_search(
        goffs, lane_idx[gord], s_long[gord], length[gord], speed[gord], eligible[gord])
    nn_g = kernels.nearest_neighbor(goffs, x[gord], y[gord])
    lead = np.full(n, -1, dtype=np.int64)
    lead[gord] = np.where(lead_g >= 0, gord[np.maximum(lead_g, 0)], -1)
    gap = np.empty(n)
    gap[gord] = gap_g
    ahead = np.empty(n)
    ahead[gord] = ahead_g
    nearest = np.empty(n)
    nearest[gord] = nn_g

    # -- rules
    has_lead = lead >= 0
    lead_speed = np.where(has_lead, speed[np.maximum(lead, 0)], np.nan)
    rules, ttc_arr = rule_matrix(speed, lead_speed, gap, has_lead, ahead, rule_config)
    rules &= eligible[:, None]
    accident = rules.all(axis=1)

    flags_s = maneuver_arrays(speed_s, accel_s, heading_s, t_s, toffs, lane_id[tord],
                              ttc_arr[tord], rules[tord, 4], rule_config, slow_s)
    flags: dict[str, np.ndarray] = {"accident_candidate": accident}
    for name in (*MANEUVERS, "heading_deviation"):
        arr = np.empty(n, dtype=flags_s[name].dtype)
        arr[tord] = flags_s[name]
        if name != "heading_deviation":
            arr &= eligible
        flags[name] = arr
    heading_dev = flags.pop("heading_deviation")

    lead_track = np.empty(n, dtype=object)
    lead_track[:] = None
    lead_track[has_lead] = track_name_arr[track_code[lead[has_lead]]]
    trace = RuleTrace(frame_index, sensor_name_arr[sensor_code] if n else np.array([], dtype=object),
                      track_name_arr[track_code] if n else np.array([], dtype=object),
                      lane_id, speed, accel, heading_dev, lead_track, gap, ttc_arr, nearest,
                      rules, flags)

    # -- candidates
    rule_cands: list[Candidate] = []
    for i in np.nonzero(accident)[0]:
        rule_cands.append(Candidate(
            int(frame_index[i]), trace.sensor_id[i], "accident", trace.track_id[i], 1.0,
            "rule_based", (trace.track_id[i], lead_track[i]), (float(x[i]), float(y[i]))))
    if config.maneuver_events:
        for name in ("hard_decel", "heading_swerve", "speeding", "tailgating"):
            for i in np.nonzero(flags[name])[0]:
                rule_cands.append(Candidate(
                    int(frame_index[i]), trace.sensor_id[i], name, trace.track_id[i], 1.0,
                    "rule_based", (trace.track_id[i],), (float(x[i]), float(y[i]))))
        for i in np.nonzero(flags["standing"])[0]:
            kind = classify_scenario(True, None if lane_idx[i] < 0 else
                                     ("shoulder" if on_shoulder[i] else "driving"))
            if kind is None:
                continue
            rule_cands.append(Candidate(
                int(frame_index[i]), trace.sensor_id[i], kind, trace.track_id[i], 1.0,
                "rule_based", (trace.track_id[i],), (float(x[i]), float(y[i]))))

    # -- learning-based validation, gated on rule candidates
    lb_cands: list[Candidate] = []
    queries = 0
    if detector is not None and accident.any():
        gated = sorted({(int(frame_pos[i]), int(sensor_code[i])) for i in np.nonzero(accident)[0]})
        starts = gord[goffs[:-1]]
        group_of = {(int(frame_pos[i]), int(sensor_code[i])): g for g, i in enumerate(starts)}
        for fpos, scode in gated:
            snap = frames[fpos]
            sensor = sensor_names[scode]
            view = snap.for_sensor(sensor)
            try:
                detections = detector.detect(view, sensor)
            except Exception as exc:  # detector faults degrade to rule-only output
                msg = f"detector failed at frame {snap.frame_index} ({exc!r}); continuing rule-based only"
                logger.warning(msg)
                warnings.append(msg)
                detector = None
                break
            queries += 1
            g = group_of[(fpos, scode)]
            rows = gord[goffs[g]:goffs[g + 1]]
            cand_rows = rows[accident[rows]]
            fallback = (float(x[cand_rows].mean()), float(y[cand_rows].mean()))
            for det in detections:
                if det.class_label not in ACCIDENT_CLASSES:
                    continue
                ids: tuple[str, ...] = ()
                loc = fallback
                if det.ground_position is not None:
                    loc = (float(det.ground_position[0]), float(det.ground_position[1]))
                    d = np.hypot(x[rows] - loc[0], y[rows] - loc[1])
                    if len(d) and d.min() <= config.assoc_radius_m:
                        ids = (trace.track_id[rows[int(np.argmin(d))]],)
                lb_cands.append(Candidate(snap.frame_index, sensor, "accident", "accident",
                                          det.confidence, "learning_based", ids, loc))

    rule_events = confirm(rule_cands, config.rba_min_frames, config.min_confidence,
                          config.gap_frames)
    lb_events = confirm(lb_cands, config.min_frames, config.min_confidence, config.gap_frames)
    per_sensor = _validate(rule_events, lb_events, config.gap_frames)

    events = fuse_cameras(per_sensor, config.fuse_radius_m, config.fuse_window_frames)
    events.sort(key=lambda e: (e.onset, e.kind, e.sensors, e.track_ids, e.frame_span[1]))
    events = [replace(e, event_id=f"evt-{k:05d}") for k, e in enumerate(events)]
    return PipelineResult(events, trace, warnings, queries)


def _validate(rule_events: list[DetectionEvent], lb_events: list[DetectionEvent],
              gap_frames: int) -> dict[str, list[DetectionEvent]]:
    """Fold confirmed detector events into the rule events they overlap (per sensor)."""
    by_sensor: dict[str, list[DetectionEvent]] = defaultdict(list)
    for ev in rule_events:
        by_sensor[ev.sensors[0]].append(ev)
    for lb in lb_events:
        sensor_events = by_sensor[lb.sensors[0]]
        hits = [k for k, ev in enumerate(sensor_events)
                if ev.kind == lb.kind and ev.source == "rule_based"
                and ev.frame_span[0] <= lb.frame_span[1] + gap_frames
                and lb.frame_span[0] <= ev.frame_span[1] + gap_frames]
        if not hits:
            sensor_events.append(lb)
            continue
        members = [sensor_events[k] for k in hits]
        first = min(members, key=lambda e: e.onset)
        merged = DetectionEvent(
            kind=lb.kind,
            track_ids=tuple(sorted({t for e in [*members, lb] for t in e.track_ids})),
            frame_span=(min(lb.frame_span[0], *(e.frame_span[0] for e in members)),
                        max(lb.frame_span[1], *(e.frame_span[1] for e in members))),
            confidence=lb.confidence,
            source="learning_based",
            location=first.location,
            sensors=lb.sensors,
        )
        by_sensor[lb.sensors[0]] = [e for k, e in enumerate(sensor_events) if k not in hits] + [merged]
    return dict(by_sensor)
