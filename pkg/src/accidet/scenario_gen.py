"""Deterministic synthetic highway scenarios with ground-truth events.

Every vehicle follows piecewise constant-acceleration longitudinal motion
along a straight lane of the default map, with optional smooth lane changes.
Background traffic circulates on per-lane rings at one speed per lane, so
followers never close on their leads; vehicles leaving the mapped stretch
re-enter at its start under a new track ID. Scenario actors are placed in
lanes kept free of background traffic.

Collisions: the follower's front reaches the lead's rear, both take a common
post-impact speed (momentum split by nominal mass) and brake to rest.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from . import openlabel
from .digital_twin import FrameSnapshot, ObjectState, annotation_from_snapshots
from .lane_model import LaneMap, build_default_lane_map

KINDS = ("normal_flow", "rear_end", "breakdown_shoulder", "standing_in_lane", "tailgate",
         "lane_change_collision", "speeding", "hard_brake")

DIMENSIONS = {
    "car": (4.5, 1.9, 1.5),
    "truck": (12.0, 2.5, 3.6),
    "bus": (12.5, 2.55, 3.2),
    "motorcycle": (2.2, 0.8, 1.4),
    "van": (6.0, 2.1, 2.7),
}
MASS_T = {"car": 1.5, "truck": 12.0, "bus": 13.0, "motorcycle": 0.3, "van": 3.0}
BACKGROUND_MIX = (("car", 0.78), ("truck", 0.14), ("bus", 0.03), ("motorcycle", 0.05))

# labelling thresholds of the truth oracle (programmed, noise-free kinematics)
TRUTH_STANDING_S = 5.0
TRUTH_HARD_DECEL = 5.0
TRUTH_TTC_S = 1.5
TRUTH_SOUTH_LIMIT_KMH = 120.0
CRASH_LEAD_IN_S = 1.5
POST_CRASH_DECEL = 7.0

SOUTH_SPEEDS_KMH = (112.0, 105.0, 98.0, 92.0, 86.0, 80.0)
NORTH_SPEEDS_KMH = (150.0, 135.0, 120.0, 105.0, 95.0, 85.0)
MIN_SPACING_M = 40.0


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "normal_flow"
    duration_s: float = 20.0
    frame_rate_hz: float = 25.0
    vehicle_count: int = 20
    seed: int = 0
    noise: float = 0.05
    sensors: int = 1
    dropout: float = 0.0
    approach_speed_kmh: float = 180.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown scenario kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not self.duration_s > 0:
            raise SpecError("duration_s must be > 0")
        if not self.frame_rate_hz > 0:
            raise SpecError("frame_rate_hz must be > 0")
        if self.vehicle_count < 0:
            raise SpecError("vehicle_count must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise SpecError("seed must fit in 64 unsigned bits")
        if self.noise < 0:
            raise SpecError("noise must be >= 0")
        if self.sensors < 1:
            raise SpecError("sensors must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise SpecError("dropout must be in [0, 1)")
        if not self.approach_speed_kmh > 0:
            raise SpecError("approach_speed_kmh must be > 0")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration_s * self.frame_rate_hz))

    @property
    def sensor_ids(self) -> tuple[str, ...]:
        return tuple(f"cam_{k + 1}" for k in range(self.sensors))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SpecError(f"unknown spec field(s): {', '.join(sorted(unknown))}")
        return cls(**data)


def load_spec(path: str | Path) -> ScenarioSpec:
    return ScenarioSpec.from_dict(yaml.safe_load(Path(path).read_text()) or {})


@dataclass(frozen=True)
class TruthEvent:
    kind: str
    track_ids: tuple[str, ...]
    frame_span: tuple[int, int]
    onset: tuple[float, float]

    def __post_init__(self):
        # stored at file precision so a written truth reloads equal
        object.__setattr__(self, "onset", (round(float(self.onset[0]), 6) + 0.0,
                                           round(float(self.onset[1]), 6) + 0.0))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "track_ids": list(self.track_ids),
                "frame_span": list(self.frame_span), "onset": list(self.onset)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TruthEvent":
        return cls(d["kind"], tuple(d["track_ids"]), (int(d["frame_span"][0]), int(d["frame_span"][1])),
                   (float(d["onset"][0]), float(d["onset"][1])))


@dataclass(frozen=True)
class GroundTruth:
    events: tuple[TruthEvent, ...] = ()
    spec: ScenarioSpec | None = None

    def of_kind(self, kind: str) -> list[TruthEvent]:
        return [e for e in self.events if e.kind == kind]

    def to_json(self) -> str:
        data: dict[str, Any] = {"events": [e.to_dict() for e in self.events]}
        if self.spec is not None:
            data["spec"] = asdict(self.spec)
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        data = json.loads(text)
        spec = ScenarioSpec.from_dict(data["spec"]) if data.get("spec") else None
        return cls(tuple(TruthEvent.from_dict(e) for e in data["events"]), spec)


def load_truth(path: str | Path) -> GroundTruth:
    return GroundTruth.from_json(Path(path).read_text())


# ------------------------------------------------------------------ motion


class Motion:
    """Piecewise constant-acceleration longitudinal motion; braking stops at rest."""

    def __init__(self, s0: float, v0: float, a0: float = 0.0):
        self.pieces: list[tuple[float, float, float, float]] = [(0.0, s0, v0, a0)]

    @staticmethod
    def _advance(piece, t):
        t0, s0, v0, a = piece
        dt = t - t0
        if a < 0:
            dt = min(dt, v0 / -a) if v0 > 0 else 0.0
        return s0 + v0 * dt + 0.5 * a * dt * dt, max(v0 + a * dt, 0.0)

    def state(self, t: float) -> tuple[float, float]:
        k = max(i for i, p in enumerate(self.pieces) if p[0] <= t)
        return self._advance(self.pieces[k], t)

    def change(self, t: float, accel: float, speed: float | None = None) -> "Motion":
        s, v = self.state(t)
        self.pieces.append((t, s, v if speed is None else speed, accel))
        return self

    def rest_time(self) -> float:
        t0, _, v0, a = self.pieces[-1]
        return t0 + v0 / -a if a < 0 else math.inf

    def evaluate(self, times: np.ndarray):
        starts = np.array([p[0] for p in self.pieces])
        k = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, None)
        t0, s0, v0, a = (np.array([p[i] for p in self.pieces])[k] for i in range(4))
        dt = times - t0
        with np.errstate(divide="ignore", invalid="ignore"):
            limit = np.where(a < 0, np.where(v0 > 0, v0 / -a, 0.0), np.inf)
        dt = np.minimum(dt, limit)
        s = s0 + v0 * dt + 0.5 * a * dt * dt
        v = np.maximum(v0 + a * dt, 0.0)
        acc = np.where((a < 0) & (v <= 0), 0.0, a)
        return s, v, acc


@dataclass
class _Actor:
    track_id: str
    category: str
    lane_id: int
    motion: Motion
    lane_changes: list[tuple[float, float, int]] = field(default_factory=list)

    @property
    def dims(self):
        return DIMENSIONS[self.category]

    @property
    def label_category(self) -> str:
        return "truck" if self.category == "van" else self.category


class _Road:
    def __init__(self, lane_map: LaneMap):
        self.lane_map = lane_map
        self.geom = {}
        for lane in lane_map.lanes:
            p0 = np.array(lane.centerline[0], dtype=float)
            p1 = np.array(lane.centerline[-1], dtype=float)
            length = float(np.linalg.norm(p1 - p0))
            u = (p1 - p0) / length
            self.geom[lane.lane_id] = (p0, u, np.array([-u[1], u[0]]), length)

    def length(self, lane_id: int) -> float:
        return self.geom[lane_id][3]

    def offset_between(self, src: int, dst: int) -> float:
        p0, _, n, _ = self.geom[src]
        return float(np.dot(self.geom[dst][0] - p0, n))

    def place(self, lane_id: int, s, offset=0.0, doffset=0.0, v=None):
        p0, u, n, _ = self.geom[lane_id]
        x = p0[0] + u[0] * s + n[0] * offset
        y = p0[1] + u[1] * s + n[1] * offset
        base = math.atan2(u[1], u[0])
        if v is None:
            yaw = np.full(np.shape(s), base)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                yaw = base + np.where(v > 0.1, np.arctan2(doffset, v), 0.0)
        return x, y, yaw


def _smoothstep(tau):
    tau = np.clip(tau, 0.0, 1.0)
    return tau * tau * (3 - 2 * tau), 6 * tau * (1 - tau)


# ------------------------------------------------------------------ builder


class _Builder:
    def __init__(self, spec: ScenarioSpec, lane_map: LaneMap):
        self.spec = spec
        self.road = _Road(lane_map)
        self.rng = np.random.default_rng(spec.seed)
        self.times = np.arange(spec.n_frames) / spec.frame_rate_hz
        self.actors: list[_Actor] = []
        self.truth: list[TruthEvent] = []
        self.reserved: set[int] = set()
        self._tracks: dict[str, dict[str, np.ndarray]] = {}

    def frame(self, t: float) -> int:
        return int(min(max(round(t * self.spec.frame_rate_hz), 0), self.spec.n_frames - 1))

    def actor(self, track_id: str, category: str, lane_id: int, motion: Motion) -> _Actor:
        a = _Actor(track_id, category, lane_id, motion)
        self.actors.append(a)
        self.reserved.add(lane_id)
        return a

    def collide(self, follower: _Actor, lead: _Actor, t_impact: float):
        v_f = follower.motion.state(t_impact)[1]
        v_l = lead.motion.state(t_impact)[1]
        mf, ml = MASS_T[follower.category], MASS_T[lead.category]
        v_c = (mf * v_f + ml * v_l) / (mf + ml)
        follower.motion.change(t_impact, -POST_CRASH_DECEL, v_c)
        lead.motion.change(t_impact, -POST_CRASH_DECEL, v_c)
        t_rest = follower.motion.rest_time()
        x, y = self.position(follower, t_impact, front=True)
        if t_impact < self.times[-1]:
            self.truth.append(TruthEvent(
                "accident", (follower.track_id, lead.track_id),
                (self.frame(t_impact - CRASH_LEAD_IN_S), self.frame(t_rest)), (x, y)))
            for a in (follower, lead):
                self.truth.append(TruthEvent(
                    "hard_decel", (a.track_id,), (self.frame(t_impact), self.frame(t_rest)),
                    self.position(a, t_impact)))

    def position(self, actor: _Actor, t: float, front: bool = False) -> tuple[float, float]:
        s, _ = actor.motion.state(t)
        if front:
            s += actor.dims[0] / 2
        lane = actor.lane_id
        off = 0.0
        for t0, t1, dst in actor.lane_changes:
            if t >= t1:
                lane = dst
            elif t > t0:
                frac = _smoothstep(np.array((t - t0) / (t1 - t0)))[0]
                off = float(frac) * self.road.offset_between(lane, dst)
        x, y, _ = self.road.place(lane, np.array(s), off)
        return float(x), float(y)

    # -- scenario kinds

    def rear_end(self):
        rng = self.rng
        s_van = rng.uniform(550.0, 700.0)
        t_impact = rng.uniform(7.0, 10.0)
        v_a = self.spec.approach_speed_kmh / 3.6
        van = self.actor("van_1", "van", -1, Motion(s_van, 0.0))
        gap_s = DIMENSIONS["van"][0] / 2 + DIMENSIONS["car"][0] / 2
        car = self.actor("car_1", "car", -1, Motion(s_van - gap_s - v_a * t_impact, v_a))
        self.collide(car, van, t_impact)

    def lane_change_collision(self):
        rng = self.rng
        v_car, v_truck = 45.0, 20.0
        s_truck = rng.uniform(300.0, 400.0)
        t_change = rng.uniform(4.0, 6.0)
        t_impact = t_change + 1.5 + 0.6
        truck = self.actor("truck_1", "truck", -2, Motion(s_truck, v_truck))
        gap_s = DIMENSIONS["truck"][0] / 2 + DIMENSIONS["car"][0] / 2
        s_car = s_truck + v_truck * t_impact - gap_s - v_car * t_impact
        car = self.actor("car_1", "car", -3, Motion(s_car, v_car))
        car.lane_changes.append((t_change, t_change + 1.5, -2))
        self.reserved.add(-2)
        self.collide(car, truck, t_impact)

    def breakdown_shoulder(self):
        rng = self.rng
        t_brake = rng.uniform(1.0, 3.0)
        car = self.actor("car_1", "car", -6, Motion(rng.uniform(100.0, 250.0), 25.0))
        car.motion.change(t_brake, -2.5)
        car.lane_changes.append((t_brake, t_brake + 4.0, -7))
        self.reserved.add(-7)

    def standing_in_lane(self):
        rng = self.rng
        t_brake = rng.uniform(1.0, 3.0)
        car = self.actor("car_1", "car", -2, Motion(rng.uniform(150.0, 300.0), 25.0))
        car.motion.change(t_brake, -3.0)

    def tailgate(self):
        rng = self.rng
        v_lead, v_follow, brake = 25.0, 30.0, -4.0
        s_lead = rng.uniform(200.0, 300.0)
        gap0 = 30.0 + rng.uniform(0.0, 10.0)
        gap_s = DIMENSIONS["car"][0]
        self.actor("car_1", "car", 3, Motion(s_lead, v_lead))
        follower = self.actor("car_2", "car", 3, Motion(s_lead - gap_s - gap0, v_follow))
        t_brake = (gap0 - 4.0) / (v_follow - v_lead)
        follower.motion.change(t_brake, brake)
        follower.motion.change(t_brake + (v_follow - v_lead) / -brake, 0.0, v_lead)

    def speeding(self):
        rng = self.rng
        self.actor("car_1", "car", -1, Motion(rng.uniform(0.0, 100.0), rng.uniform(140.0, 170.0) / 3.6))
        self.actor("car_2", "car", 1, Motion(rng.uniform(0.0, 100.0), 200.0 / 3.6))

    def hard_brake(self):
        rng = self.rng
        t_brake = rng.uniform(3.0, 6.0)
        car = self.actor("car_1", "car", 4, Motion(rng.uniform(50.0, 150.0), 30.0))
        car.motion.change(t_brake, -7.0)
        car.motion.change(t_brake + 20.0 / 7.0, 0.0)
        if t_brake < self.times[-1]:
            self.truth.append(TruthEvent("hard_decel", ("car_1",),
                                         (self.frame(t_brake), self.frame(t_brake + 20.0 / 7.0)),
                                         self.position(car, t_brake)))

    # -- sampling

    def actor_rows(self):
        rows = []
        for a in self.actors:
            s, v, acc = a.motion.evaluate(self.times)
            lane = np.full(s.shape, a.lane_id)
            off = np.zeros_like(s)
            doff = np.zeros_like(s)
            for t0, t1, dst in a.lane_changes:
                delta = self.road.offset_between(a.lane_id, dst)
                frac, dfrac = _smoothstep((self.times - t0) / (t1 - t0))
                off = frac * delta
                doff = np.where((self.times > t0) & (self.times < t1), dfrac * delta / (t1 - t0), 0.0)
            x, y, yaw = self.road.place(a.lane_id, s, off, doff, v)
            length = self.road.length(a.lane_id)
            visible = (s >= 0) & (s <= length)
            self._tracks[a.track_id] = {"s": s, "v": v, "a": acc, "x": x, "y": y, "lane": lane,
                                        "visible": visible}
            idx = np.nonzero(visible)[0]
            rows.append((idx, np.full(len(idx), a.track_id, dtype=object), a.label_category,
                         a.dims, x[idx], y[idx], yaw[idx], v[idx]))
        return rows

    def background_rows(self, count: int):
        rng = self.rng
        lanes = [lid for lid in (-1, -2, -3, -4, -5, -6, 1, 2, 3, 4, 5, 6) if lid not in self.reserved]
        if count <= 0 or not lanes:
            return []
        per_lane = {lid: 0 for lid in lanes}
        order = rng.permutation(len(lanes))
        for k in range(count):
            per_lane[lanes[order[k % len(lanes)]]] += 1
        cats = [c for c, _ in BACKGROUND_MIX]
        probs = np.array([p for _, p in BACKGROUND_MIX])
        rows = []
        for lid in lanes:
            n = per_lane[lid]
            if n == 0:
                continue
            length = self.road.length(lid)
            circ = length * 1.1
            n = min(n, int(circ // MIN_SPACING_M))
            base = (SOUTH_SPEEDS_KMH if lid < 0 else NORTH_SPEEDS_KMH)[abs(lid) - 1]
            v = (base + rng.uniform(-3.0, 3.0)) / 3.6
            spacing = circ / n
            jitter = rng.uniform(0.0, max(spacing - MIN_SPACING_M, 0.0), size=n)
            start = np.arange(n) * spacing + jitter
            kinds = rng.choice(len(cats), size=n, p=probs)
            travelled = start[:, None] + v * self.times[None, :]
            lap = np.floor(travelled / circ).astype(np.int64)
            s = travelled - lap * circ
            for j in range(n):
                vis = s[j] <= length
                idx = np.nonzero(vis)[0]
                cat = cats[kinds[j]]
                ids = np.array([f"b{lid:+d}.{j}.{k}" for k in lap[j, idx]], dtype=object)
                x, y, yaw = self.road.place(lid, s[j, idx])
                rows.append((idx, ids, cat, DIMENSIONS[cat], x, y, yaw, np.full(len(idx), v)))
        return rows

    def derived_truth(self):
        """Standing, speeding and tailgating labels from programmed kinematics."""
        fps = self.spec.frame_rate_hz
        lane_map = self.road.lane_map
        for a in self.actors:
            tr = self._tracks[a.track_id]
            stopped = (tr["v"] <= 0) & tr["visible"]
            for f0, f1 in _runs(stopped):
                if (f1 - f0) / fps >= TRUTH_STANDING_S - 1e-9:
                    idx, _, _ = lane_map.locate(tr["x"][f0:f0 + 1], tr["y"][f0:f0 + 1])
                    if idx[0] < 0:
                        continue
                    kind = ("breakdown_shoulder" if lane_map.lanes[idx[0]].kind == "shoulder"
                            else "standing_in_driving_lane")
                    self.truth.append(TruthEvent(kind, (a.track_id,), (f0, f1),
                                                 (float(tr["x"][f0]), float(tr["y"][f0]))))
            fast = (tr["v"] * 3.6 > TRUTH_SOUTH_LIMIT_KMH) & tr["visible"] & (a.lane_id < 0)
            for f0, f1 in _runs(fast):
                self.truth.append(TruthEvent("speeding", (a.track_id,), (f0, f1),
                                             (float(tr["x"][f0]), float(tr["y"][f0]))))
        if self.spec.kind == "tailgate":
            lead, fol = self._tracks["car_1"], self._tracks["car_2"]
            gap = lead["s"] - fol["s"] - DIMENSIONS["car"][0]
            closing = fol["v"] - lead["v"]
            with np.errstate(divide="ignore", invalid="ignore"):
                ttc = np.where(closing > 1e-9, gap / closing, np.inf)
            close = (ttc <= TRUTH_TTC_S) & lead["visible"] & fol["visible"]
            for f0, f1 in _runs(close):
                self.truth.append(TruthEvent("tailgating", ("car_2",), (f0, f1),
                                             (float(fol["x"][f0]), float(fol["y"][f0]))))


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive (first, last) index pairs of True runs."""
    if not mask.any():
        return []
    padded = np.concatenate([[False], mask, [False]])
    d = np.diff(padded.astype(np.int8))
    starts = np.nonzero(d == 1)[0]
    ends = np.nonzero(d == -1)[0] - 1
    return list(zip(starts.tolist(), ends.tolist()))


def _quantize(a: np.ndarray) -> np.ndarray:
    return np.round(a, openlabel.DECIMALS) + 0.0


def generate(spec: ScenarioSpec, lane_map: LaneMap | None = None
             ) -> tuple[list[FrameSnapshot], GroundTruth]:
    """Frame snapshots (one view per sensor) and ground truth for ``spec``."""
    lane_map = lane_map or build_default_lane_map()
    b = _Builder(spec, lane_map)
    if spec.kind != "normal_flow":
        getattr(b, spec.kind)()
    rows = b.actor_rows()
    rows += b.background_rows(spec.vehicle_count - len(b.actors))
    b.derived_truth()

    if rows:
        frame = np.concatenate([r[0] for r in rows])
        track = np.concatenate([r[1] for r in rows])
        cat = np.concatenate([np.full(len(r[0]), r[2], dtype=object) for r in rows])
        dims = np.concatenate([np.tile(r[3], (len(r[0]), 1)) for r in rows]).reshape(-1, 3)
        x = np.concatenate([r[4] for r in rows])
        y = np.concatenate([r[5] for r in rows])
        yaw = np.concatenate([r[6] for r in rows])
        v = np.concatenate([r[7] for r in rows])
    else:
        frame = np.zeros(0, dtype=np.int64)
        track = cat = np.zeros(0, dtype=object)
        dims = np.zeros((0, 3))
        x = y = yaw = v = np.zeros(0)

    yaw = _quantize(np.arctan2(np.sin(yaw), np.cos(yaw)))
    yaw = np.where(yaw > math.pi, 3.141592, np.where(yaw <= -math.pi, -3.141592, yaw))
    timestamps = _quantize(b.times)

    per_sensor = []
    for sensor in spec.sensor_ids:
        n = len(frame)
        jitter = b.rng.normal(0.0, spec.noise, size=(n, 2)) if spec.noise > 0 else np.zeros((n, 2))
        keep = b.rng.random(n) >= spec.dropout if spec.dropout > 0 else np.ones(n, dtype=bool)
        xs = _quantize(x + jitter[:, 0])
        ys = _quantize(y + jitter[:, 1])
        dist = np.hypot(xs, ys)
        points = np.round(4000.0 * np.exp(-dist / 100.0)).astype(np.int64)
        per_sensor.append((sensor, keep, xs, ys, points))

    speed_kmh = _quantize(v * 3.6)
    dims_q = _quantize(dims)
    z = _quantize(dims[:, 2] / 2) if len(dims) else np.zeros(0)
    track_str = track.astype(str) if len(track) else np.zeros(0, dtype=str)

    buckets: list[list[ObjectState]] = [[] for _ in range(spec.n_frames)]
    for sensor, keep, xs, ys, points in per_sensor:
        order = np.lexsort((track_str, frame))
        for i in order[keep[order]]:
            f = int(frame[i])
            buckets[f].append(ObjectState(
                track_id=track[i],
                category=cat[i],
                timestamp=float(timestamps[f]),
                position=(float(xs[i]), float(ys[i]), float(z[i])),
                dimensions=(float(dims_q[i, 0]), float(dims_q[i, 1]), float(dims_q[i, 2])),
                yaw=float(yaw[i]),
                sensor_id=sensor,
                frame_index=f,
                num_points=int(points[i]),
                label_speed_kmh=float(speed_kmh[i]),
            ))
    frames = []
    for f in range(spec.n_frames):
        objs = sorted(buckets[f], key=lambda o: (o.track_id, o.sensor_id))
        frames.append(FrameSnapshot(float(timestamps[f]), f, tuple(objs)))
    truth = GroundTruth(tuple(sorted(b.truth, key=lambda e: (e.frame_span, e.kind, e.track_ids))), spec)
    return frames, truth


def export(frames: list[FrameSnapshot], truth: GroundTruth) -> tuple[bytes, bytes]:
    """Annotation document bytes and truth document bytes."""
    meta = openlabel.Metadata(extensions={"generator": "accidet.scenario_gen",
                                          "scenario": asdict(truth.spec) if truth.spec else {}})
    annotation = annotation_from_snapshots(frames, meta)
    return openlabel.serialize(annotation), truth.to_json().encode("utf-8")


def truth_path_for(path: str | Path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".truth.json")


def write_scenario(frames: list[FrameSnapshot], truth: GroundTruth, path: str | Path,
                   truth_path: str | Path | None = None) -> Path:
    doc, truth_doc = export(frames, truth)
    Path(path).write_bytes(doc)
    tp = Path(truth_path) if truth_path else truth_path_for(path)
    tp.write_bytes(truth_doc)
    return tp
