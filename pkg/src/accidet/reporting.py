"""Dataset statistics, event scoring and runtime measurement.

Statistics aggregate over tracks and merge associatively: two reports over
separate recordings (no shared sensor frame) combine into the report of
their union. Histogram and count fields add, maxima take the max and means
are rebuilt from sums.
"""

from __future__ import annotations

import csv
import json
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .digital_twin import KinematicsConfig, Track, derive_kinematics
from .lane_model import VEHICLE_CATEGORIES, LaneMap
from .rule_engine import KMH, RuleConfig, maneuver_arrays

DIRECTIONS = ("north", "south")


@dataclass(frozen=True)
class StatsConfig:
    track_length_bin_m: float = 25.0
    distance_bin_m: float = 20.0
    labels_bin: int = 5
    sensor_origin: tuple[float, float] | None = None
    rules: RuleConfig = field(default_factory=RuleConfig)
    kinematics: KinematicsConfig = field(default_factory=KinematicsConfig)

    def __post_init__(self):
        if not (self.track_length_bin_m > 0 and self.distance_bin_m > 0 and self.labels_bin > 0):
            raise ValueError("histogram bin widths must be > 0")


def default_origin(lane_map: LaneMap) -> tuple[float, float]:
    """Start of the lane-map extent: minimum x, mid-height in y."""
    pts = np.array([p for lane in lane_map.lanes for p in lane.centerline], dtype=float)
    return float(pts[:, 0].min()), float((pts[:, 1].min() + pts[:, 1].max()) / 2)


def _bucket(value: float, width: float) -> float:
    return math.floor(value / width) * width + 0.0


def _add(a: Mapping, b: Mapping) -> dict:
    out = Counter(a)
    out.update(b)
    return dict(sorted(out.items(), key=lambda kv: (isinstance(kv[0], str), kv[0])))


def _max(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


@dataclass
class StatsReport:
    unique_vehicle_count: int = 0
    per_class_counts: dict[str, int] = field(default_factory=dict)
    per_lane_counts: dict[Any, int] = field(default_factory=dict)
    track_length_histogram: dict[float, int] = field(default_factory=dict)
    total_track_length_km: float = 0.0
    labels_per_frame_histogram: dict[float, int] = field(default_factory=dict)
    labeling_distance_histogram: dict[float, int] = field(default_factory=dict)
    speed_sums: dict[str, tuple[float, int]] = field(default_factory=dict)
    speed_max: dict[str, float] = field(default_factory=dict)
    speeding_counts: dict[str, tuple[int, int]] = field(default_factory=dict)
    speeding_limits: dict[str, float | None] = field(default_factory=dict)
    max_speed: dict[str, float | None] = field(default_factory=dict)
    standing_counts: dict[str, int] = field(default_factory=lambda: {"driving_lane": 0, "shoulder": 0})
    breakdown_count: int = 0

    @property
    def speed_stats(self) -> dict[str, dict[str, float]]:
        """Per-class {mean, max} speed in km/h over all states with a speed."""
        return {c: {"mean": s / n, "max": self.speed_max[c]}
                for c, (s, n) in sorted(self.speed_sums.items()) if n}

    @property
    def speeding_fraction(self) -> dict[str, float | None]:
        out = {}
        for d in DIRECTIONS:
            fast, total = self.speeding_counts.get(d, (0, 0))
            out[d] = None if self.speeding_limits.get(d) is None or total == 0 else fast / total
        return out

    def merge(self, other: "StatsReport") -> "StatsReport":
        if self.speeding_limits and other.speeding_limits and self.speeding_limits != other.speeding_limits:
            raise ValueError("cannot merge reports computed with different speed limits")
        return StatsReport(
            unique_vehicle_count=self.unique_vehicle_count + other.unique_vehicle_count,
            per_class_counts=_add(self.per_class_counts, other.per_class_counts),
            per_lane_counts=_add(self.per_lane_counts, other.per_lane_counts),
            track_length_histogram=_add(self.track_length_histogram, other.track_length_histogram),
            total_track_length_km=self.total_track_length_km + other.total_track_length_km,
            labels_per_frame_histogram=_add(self.labels_per_frame_histogram,
                                            other.labels_per_frame_histogram),
            labeling_distance_histogram=_add(self.labeling_distance_histogram,
                                             other.labeling_distance_histogram),
            speed_sums={c: (self.speed_sums.get(c, (0.0, 0))[0] + other.speed_sums.get(c, (0.0, 0))[0],
                            self.speed_sums.get(c, (0.0, 0))[1] + other.speed_sums.get(c, (0.0, 0))[1])
                        for c in sorted(set(self.speed_sums) | set(other.speed_sums))},
            speed_max={c: _max(self.speed_max.get(c), other.speed_max.get(c))
                       for c in sorted(set(self.speed_max) | set(other.speed_max))},
            speeding_counts={d: tuple(a + b for a, b in zip(self.speeding_counts.get(d, (0, 0)),
                                                             other.speeding_counts.get(d, (0, 0))))
                             for d in DIRECTIONS},
            speeding_limits=self.speeding_limits or other.speeding_limits,
            max_speed={d: _max(self.max_speed.get(d), other.max_speed.get(d)) for d in DIRECTIONS},
            standing_counts=_add(self.standing_counts, other.standing_counts),
            breakdown_count=self.breakdown_count + other.breakdown_count,
        )

    def to_dict(self) -> dict[str, Any]:
        def keyed(d):
            return {str(k): v for k, v in d.items()}

        return {
            "unique_vehicle_count": self.unique_vehicle_count,
            "per_class_counts": keyed(self.per_class_counts),
            "per_lane_counts": keyed(self.per_lane_counts),
            "track_length_histogram": keyed(self.track_length_histogram),
            "total_track_length_km": self.total_track_length_km,
            "labels_per_frame_histogram": keyed(self.labels_per_frame_histogram),
            "labeling_distance_histogram": keyed(self.labeling_distance_histogram),
            "speed_stats": self.speed_stats,
            "speeding_fraction": self.speeding_fraction,
            "max_speed": self.max_speed,
            "standing_counts": dict(self.standing_counts),
            "breakdown_count": self.breakdown_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def rows(self) -> list[tuple[str, str, Any]]:
        """Flat (metric, key, value) rows; the CSV layout."""
        out: list[tuple[str, str, Any]] = [("unique_vehicle_count", "", self.unique_vehicle_count),
                                           ("total_track_length_km", "", self.total_track_length_km),
                                           ("breakdown_count", "", self.breakdown_count)]
        for name in ("per_class_counts", "per_lane_counts", "track_length_histogram",
                     "labels_per_frame_histogram", "labeling_distance_histogram", "standing_counts"):
            out += [(name, str(k), v) for k, v in getattr(self, name).items()]
        for cls, st in self.speed_stats.items():
            out += [("speed_mean_kmh", cls, st["mean"]), ("speed_max_kmh", cls, st["max"])]
        for d, v in self.speeding_fraction.items():
            out.append(("speeding_fraction", d, "" if v is None else v))
        for d, v in self.max_speed.items():
            out.append(("max_speed_kmh", d, "" if v is None else v))
        return out

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["metric", "key", "value"])
            w.writerows(self.rows())


def _direction(lane_ids: np.ndarray) -> str | None:
    """Travel direction from the most common signed lane; None when never on the road."""
    on = lane_ids[lane_ids != 0]
    if len(on) == 0:
        return None
    north = int((on > 0).sum())
    return "north" if north * 2 > len(on) else "south" if north * 2 < len(on) else (
        "north" if on[0] > 0 else "south")


def compute_stats(tracks: Mapping[Any, Track] | Iterable[Track], lane_map: LaneMap,
                  config: StatsConfig | None = None) -> StatsReport:
    config = config or StatsConfig()
    tracks = list(tracks.values()) if isinstance(tracks, Mapping) else list(tracks)
    tracks.sort(key=lambda tr: (tr.states[0].sensor_id, tr.track_id, tr.states[0].timestamp)
                if tr.states else ("", tr.track_id, 0.0))
    tracks = [tr for tr in tracks if tr.states]
    report = StatsReport()
    rules = config.rules
    report.speeding_limits = {"north": rules.speed_limit_north_kmh,
                              "south": rules.speed_limit_south_kmh}
    report.max_speed = {d: None for d in DIRECTIONS}
    report.speeding_counts = {d: (0, 0) for d in DIRECTIONS}
    if not tracks:
        return report
    origin = config.sensor_origin or default_origin(lane_map)
    kin = derive_kinematics(tracks, config.kinematics)

    states = [s for tr in tracks for s in tr.states]
    x = np.array([s.position[0] for s in states])
    y = np.array([s.position[1] for s in states])
    lane_idx, _, _ = lane_map.locate(x, y)
    lane_arr = lane_map.arrays
    lane_ids = np.where(lane_idx >= 0, lane_arr["lane_id"][np.maximum(lane_idx, 0)], 0)
    shoulder = np.where(lane_idx >= 0, lane_arr["is_shoulder"][np.maximum(lane_idx, 0)], False)
    offsets = np.zeros(len(tracks) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(tr.states) for tr in tracks])

    per_lane = Counter("off_road" if lid == 0 else int(lid) for lid in lane_ids.tolist())
    report.per_lane_counts = dict(sorted(per_lane.items(), key=lambda kv: (isinstance(kv[0], str), kv[0])))

    dist = [math.sqrt((px - origin[0]) ** 2 + (py - origin[1]) ** 2) for px, py in zip(x.tolist(), y.tolist())]
    report.labeling_distance_histogram = dict(sorted(
        Counter(_bucket(d, config.distance_bin_m) for d in dist).items()))

    per_frame = Counter((s.sensor_id, s.frame_index) for s in states)
    report.labels_per_frame_histogram = dict(sorted(
        Counter(_bucket(c, config.labels_bin) for c in per_frame.values()).items()))

    t = np.array([s.timestamp for s in states])
    speed = np.concatenate([k.speed for k in kin])
    slow = np.concatenate([k.standing_speed for k in kin])
    n = len(states)
    flags = maneuver_arrays(speed, np.concatenate([k.acceleration for k in kin]),
                            np.concatenate([k.heading for k in kin]), t, offsets, lane_ids,
                            np.full(n, np.inf), np.zeros(n, dtype=bool), rules, slow)
    standing = flags["standing"]

    lengths = []
    classes: Counter = Counter()
    sums: dict[str, list[float]] = {}
    speeding = {d: [0, 0] for d in DIRECTIONS}
    standing_counts = Counter({"driving_lane": 0, "shoulder": 0})
    for k, tr in enumerate(tracks):
        a, b = offsets[k], offsets[k + 1]
        xy = tr.xy
        d = np.diff(xy, axis=0)
        lengths.append(math.fsum(np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]).tolist()))
        cat = tr.category
        classes[cat] += 1
        v_kmh = speed[a:b] * KMH
        v_kmh = v_kmh[~np.isnan(v_kmh)]
        if len(v_kmh):
            sums.setdefault(cat, []).extend(v_kmh.tolist())
        if cat not in VEHICLE_CATEGORIES:
            continue
        report.unique_vehicle_count += 1
        direction = _direction(lane_ids[a:b])
        if direction is not None and len(v_kmh):
            report.max_speed[direction] = _max(report.max_speed[direction], float(v_kmh.max()))
            limit = report.speeding_limits[direction]
            speeding[direction][1] += 1
            if limit is not None and math.fsum(v_kmh.tolist()) / len(v_kmh) > limit:
                speeding[direction][0] += 1
        # standing episodes: runs of the sustained flag, labelled by lane kind at their start
        st = standing[a:b]
        starts = np.nonzero(st & ~np.concatenate([[False], st[:-1]]))[0]
        kinds = set()
        for i in starts:
            if lane_ids[a + i] == 0:
                continue
            kind = "shoulder" if shoulder[a + i] else "driving_lane"
            kinds.add(kind)
            moved = np.nanmax(speed[a:a + i + 1], initial=0.0) >= rules.v_min_mps
            if kind == "shoulder" and moved:
                report.breakdown_count += 1
        for kind in kinds:
            standing_counts[kind] += 1

    report.per_class_counts = dict(sorted(classes.items()))
    report.track_length_histogram = dict(sorted(
        Counter(_bucket(v, config.track_length_bin_m) for v in lengths).items()))
    report.total_track_length_km = math.fsum(lengths) / 1000.0
    report.speed_sums = {c: (math.fsum(v), len(v)) for c, v in sorted(sums.items())}
    report.speed_max = {c: max(v) for c, v in sorted(sums.items())}
    report.speeding_counts = {d: (speeding[d][0], speeding[d][1]) for d in DIRECTIONS}
    report.standing_counts = dict(standing_counts)
    return report


# ------------------------------------------------------------------ scoring


@dataclass(frozen=True)
class ClassificationMetrics:
    true_positives: int
    false_positives: int
    false_negatives: int

    @property
    def precision(self) -> float | None:
        d = self.true_positives + self.false_positives
        return self.true_positives / d if d else None

    @property
    def recall(self) -> float | None:
        d = self.true_positives + self.false_negatives
        return self.true_positives / d if d else None

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        if p is None or r is None or p + r == 0:
            return 0.0
        return 2 * p * r / (p + r)

    def to_dict(self) -> dict[str, Any]:
        return {"true_positives": self.true_positives, "false_positives": self.false_positives,
                "false_negatives": self.false_negatives, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def _span(ev) -> tuple[int, int]:
    return int(ev.frame_span[0]), int(ev.frame_span[1])


def _events(truth) -> list:
    return list(truth.events) if hasattr(truth, "events") else list(truth)


def match_events(predicted: Sequence, truth, kinds: Iterable[str] | None = None
                 ) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Greedy one-to-one matching by earliest onset on kind and span overlap.

    Returns (matched (pred, truth) index pairs, unmatched pred indices,
    unmatched truth indices), indices into the filtered input order.
    """
    truth = _events(truth)
    if kinds is not None:
        kinds = set(kinds)
        predicted = [p for p in predicted if p.kind in kinds]
        truth = [t for t in truth if t.kind in kinds]
    p_order = sorted(range(len(predicted)), key=lambda i: (_span(predicted[i]), i))
    t_order = sorted(range(len(truth)), key=lambda j: (_span(truth[j]), j))
    used = set()
    pairs = []
    for i in p_order:
        a0, a1 = _span(predicted[i])
        for j in t_order:
            if j in used or truth[j].kind != predicted[i].kind:
                continue
            b0, b1 = _span(truth[j])
            if a0 <= b1 and b0 <= a1:
                used.add(j)
                pairs.append((i, j))
                break
    matched_p = {i for i, _ in pairs}
    return (pairs, [i for i in range(len(predicted)) if i not in matched_p],
            [j for j in range(len(truth)) if j not in used])


def score_events(predicted: Sequence, truth, kinds: Iterable[str] | None = None
                 ) -> ClassificationMetrics:
    pairs, fp, fn = match_events(predicted, truth, kinds)
    return ClassificationMetrics(len(pairs), len(fp), len(fn))


def score_by_kind(predicted: Sequence, truth) -> dict[str, ClassificationMetrics]:
    kinds = sorted({e.kind for e in predicted} | {e.kind for e in _events(truth)})
    return {k: score_events(predicted, truth, [k]) for k in kinds}


# ------------------------------------------------------------------ timing


def bench(frames: Sequence, lane_map: LaneMap, rule_config: RuleConfig | None = None,
          detector=None, config=None, include_detector: bool = False,
          warmup: bool = True) -> dict[str, float | None]:
    """Wall-clock timing of ``run_pipeline`` on in-memory frames.

    A short warm-up run (first 50 frames) absorbs one-off JIT and import cost.
    """
    from .event_pipeline import run_pipeline

    det = detector if include_detector else None
    if warmup and len(frames):
        run_pipeline(frames[:50], lane_map, rule_config, det, config)
    t0 = time.perf_counter()
    run_pipeline(frames, lane_map, rule_config, det, config)
    total = time.perf_counter() - t0
    n = len(frames)
    return {
        "frames": n,
        "total_s": total,
        "frames_per_second": n / total if n and total > 0 else None,
        "ms_per_frame": 1000.0 * total / n if n else None,
    }
