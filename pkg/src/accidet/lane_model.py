"""Lane map, lane assignment and lead-vehicle search.

Road frame of the default map: x runs north along the carriageway, y is
lateral. Northbound lanes (+1..+6, shoulder +7) lie at y < 0 and travel
towards +x; southbound lanes (-1..-6, shoulder -7) lie at y > 0 and travel
towards -x. Lane 1 of each direction is next to the median, lane 6 the
outermost driving lane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from . import kernels

LANE_KINDS = ("driving", "shoulder", "exit")
VEHICLE_CATEGORIES = frozenset({"car", "truck", "bus", "motorcycle"})

DEFAULT_LANE_WIDTH = 3.5
DEFAULT_SHOULDER_WIDTH = 3.0
DEFAULT_LENGTH = 1000.0
DEFAULT_MEDIAN = 2.0
DEFAULT_SLACK = 0.3


class LaneMapError(ValueError):
    pass


@dataclass(frozen=True)
class Lane:
    lane_id: int
    kind: str
    centerline: tuple[tuple[float, float], ...]
    width: float

    def __post_init__(self):
        if self.lane_id == 0:
            raise LaneMapError("lane_id 0 is reserved")
        if self.kind not in LANE_KINDS:
            raise LaneMapError(f"lane {self.lane_id}: unknown kind {self.kind!r}")
        if not self.width > 0:
            raise LaneMapError(f"lane {self.lane_id}: width must be > 0")
        if len(self.centerline) < 2:
            raise LaneMapError(f"lane {self.lane_id}: centerline needs >= 2 points")

    @property
    def direction(self) -> str:
        return "north" if self.lane_id > 0 else "south"

    def travel_directions(self) -> np.ndarray:
        """Unit vector per centerline segment."""
        pts = np.asarray(self.centerline, dtype=float)
        d = np.diff(pts, axis=0)
        return d / np.linalg.norm(d, axis=1, keepdims=True)

    def point_at(self, s: float, offset: float = 0.0) -> tuple[float, float, float]:
        """Position ``s`` metres along the centerline, ``offset`` to the left.

        Returns (x, y, heading). Beyond either end the first/last segment is
        extended.
        """
        pts = np.asarray(self.centerline, dtype=float)
        seg = np.diff(pts, axis=0)
        seg_len = np.linalg.norm(seg, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        k = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1))
        u = seg[k] / seg_len[k]
        base = pts[k] + u * (s - cum[k])
        left = np.array([-u[1], u[0]])
        p = base + left * offset
        return float(p[0]), float(p[1]), math.atan2(u[1], u[0])


@dataclass(frozen=True)
class LeadInfo:
    follower_id: str
    lead_id: str
    gap_m: float
    lane_id: int


class LaneMap:
    """Immutable set of lanes with precomputed segment arrays for the kernels."""

    def __init__(self, lanes: Sequence[Lane], slack: float = DEFAULT_SLACK):
        ids = [lane.lane_id for lane in lanes]
        if len(set(ids)) != len(ids):
            raise LaneMapError("lane IDs must be unique")
        if not lanes:
            raise LaneMapError("lane map has no lanes")
        self.lanes: tuple[Lane, ...] = tuple(lanes)
        self.slack = float(slack)
        self._by_id = {lane.lane_id: lane for lane in self.lanes}
        self._index = {lane.lane_id: i for i, lane in enumerate(self.lanes)}

    def __eq__(self, other):
        return isinstance(other, LaneMap) and self.lanes == other.lanes and self.slack == other.slack

    def __hash__(self):
        return hash((self.lanes, self.slack))

    def lane(self, lane_id: int) -> Lane:
        return self._by_id[lane_id]

    def __contains__(self, lane_id) -> bool:
        return lane_id in self._by_id

    @property
    def lane_ids(self) -> np.ndarray:
        return np.array([lane.lane_id for lane in self.lanes], dtype=np.int64)

    @cached_property
    def arrays(self) -> dict[str, np.ndarray]:
        x0, y0, x1, y1, lane_idx, s0 = [], [], [], [], [], []
        for i, lane in enumerate(self.lanes):
            s = 0.0
            pts = lane.centerline
            for (ax, ay), (bx, by) in zip(pts[:-1], pts[1:]):
                x0.append(ax)
                y0.append(ay)
                x1.append(bx)
                y1.append(by)
                lane_idx.append(i)
                s0.append(s)
                s += math.hypot(bx - ax, by - ay)
        order = sorted(range(len(self.lanes)),
                       key=lambda i: (abs(self.lanes[i].lane_id), self.lanes[i].lane_id))
        return {
            "seg_x0": np.array(x0, dtype=float),
            "seg_y0": np.array(y0, dtype=float),
            "seg_x1": np.array(x1, dtype=float),
            "seg_y1": np.array(y1, dtype=float),
            "seg_lane": np.array(lane_idx, dtype=np.int64),
            "seg_s0": np.array(s0, dtype=float),
            "lane_tol": np.array([lane.width / 2 + self.slack for lane in self.lanes], dtype=float),
            "lane_order": np.array(order, dtype=np.int64),
            "lane_id": self.lane_ids,
            "is_shoulder": np.array([lane.kind == "shoulder" for lane in self.lanes]),
        }

    def locate(self, x: np.ndarray, y: np.ndarray):
        """Vectorised lane assignment.

        Returns (lane_index into ``lanes`` or -1, longitudinal coordinate
        along the lane's travel direction, lateral distance).
        """
        a = self.arrays
        x = np.ascontiguousarray(x, dtype=float)
        y = np.ascontiguousarray(y, dtype=float)
        return kernels.assign_lanes(x, y, a["seg_x0"], a["seg_y0"], a["seg_x1"], a["seg_y1"],
                                    a["seg_lane"], a["seg_s0"], a["lane_tol"], a["lane_order"])

    def to_dict(self) -> dict[str, Any]:
        return {
            "slack": self.slack,
            "lanes": [
                {"id": lane.lane_id, "kind": lane.kind, "width": lane.width,
                 "centerline": [list(p) for p in lane.centerline]}
                for lane in self.lanes
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LaneMap":
        if not isinstance(data, dict) or "lanes" not in data:
            raise LaneMapError("lane map needs a 'lanes' list")
        lanes = []
        for i, entry in enumerate(data["lanes"]):
            try:
                lanes.append(Lane(
                    lane_id=int(entry["id"]),
                    kind=str(entry.get("kind", "driving")),
                    centerline=tuple((float(p[0]), float(p[1])) for p in entry["centerline"]),
                    width=float(entry.get("width", DEFAULT_LANE_WIDTH)),
                ))
            except (KeyError, TypeError, IndexError) as exc:
                raise LaneMapError(f"lanes[{i}]: malformed entry ({exc})") from None
        return cls(lanes, slack=float(data.get("slack", DEFAULT_SLACK)))

    def translated(self, dx: float, dy: float) -> "LaneMap":
        return LaneMap([Lane(l.lane_id, l.kind, tuple((x + dx, y + dy) for x, y in l.centerline), l.width)
                        for l in self.lanes], self.slack)

    def rotated(self, theta: float) -> "LaneMap":
        c, s = math.cos(theta), math.sin(theta)
        return LaneMap([Lane(l.lane_id, l.kind,
                             tuple((c * x - s * y, s * x + c * y) for x, y in l.centerline), l.width)
                        for l in self.lanes], self.slack)


def build_default_lane_map(length: float = DEFAULT_LENGTH, lane_width: float = DEFAULT_LANE_WIDTH,
                           shoulder_width: float = DEFAULT_SHOULDER_WIDTH,
                           median: float = DEFAULT_MEDIAN, slack: float = DEFAULT_SLACK) -> LaneMap:
    """Straight 12-lane highway plus two shoulders."""
    lanes = []
    for sign in (1, -1):
        edge = median / 2
        for k in range(1, 8):
            width = lane_width if k <= 6 else shoulder_width
            center = edge + width / 2
            edge += width
            # northbound on the y < 0 side, travelling +x
            y = -center if sign > 0 else center
            line = ((0.0, y), (length, y)) if sign > 0 else ((length, y), (0.0, y))
            lanes.append(Lane(sign * k, "driving" if k <= 6 else "shoulder", line, width))
    return LaneMap(lanes, slack)


def load_lane_map(source: str | Path | None = None) -> LaneMap:
    """Load a lane map file (YAML or JSON); ``None``/``"default"`` gives the bundled map."""
    if source is None or str(source) == "default":
        text = resources.files("accidet.data").joinpath("default_lanes.yaml").read_text()
    else:
        text = Path(source).read_text()
    return LaneMap.from_dict(yaml.safe_load(text))


def assign_lane(position: Sequence[float], lane_map: LaneMap) -> int | None:
    """Lane ID whose centerline is laterally nearest, or None off-road.

    Equidistant candidates resolve to the smaller |lane_id|.
    """
    idx, _, _ = lane_map.locate(np.array([position[0]]), np.array([position[1]]))
    return None if idx[0] < 0 else int(lane_map.lanes[idx[0]].lane_id)


def distance_matrix(frame) -> np.ndarray:
    """Pairwise ground-plane centroid distances of a frame's objects."""
    x = np.array([o.position[0] for o in frame.objects], dtype=float)
    y = np.array([o.position[1] for o in frame.objects], dtype=float)
    return kernels.pairwise_distances(x, y)


def frame_leads(frame, lane_map: LaneMap, vehicles_only: bool = True, sensor_id: str | None = None):
    """Lane, longitudinal position and lead for every object of one sensor view.

    Returns (objects, lane_ids, s, lead_index, gap, ahead_max_speed).
    """
    objects = [o for o in frame.objects if sensor_id is None or o.sensor_id == sensor_id]
    n = len(objects)
    x = np.array([o.position[0] for o in objects], dtype=float)
    y = np.array([o.position[1] for o in objects], dtype=float)
    lane_idx, s, _ = lane_map.locate(x, y)
    length = np.array([o.dimensions[0] for o in objects], dtype=float)
    speed = np.array([np.nan if o.speed_mps is None else o.speed_mps for o in objects], dtype=float)
    eligible = np.array([(not vehicles_only) or o.category in VEHICLE_CATEGORIES for o in objects],
                        dtype=np.bool_)
    offsets = np.array([0, n], dtype=np.int64)
    lead, gap, ahead = kernels.lead_search(offsets, lane_idx, s, length, speed, eligible)
    ids = lane_map.lane_ids
    lane_ids = [None if i < 0 else int(ids[i]) for i in lane_idx]
    return objects, lane_ids, s, lead, gap, ahead


def find_lead(frame, follower_id: str, lane_map: LaneMap, vehicles_only: bool = True,
              sensor_id: str | None = None) -> LeadInfo | None:
    """Nearest same-lane object strictly ahead of the follower, or None."""
    if sensor_id is None:
        for o in frame.objects:
            if o.track_id == follower_id:
                sensor_id = o.sensor_id
                break
        else:
            return None
    objects, lane_ids, _, lead, gap, _ = frame_leads(frame, lane_map, vehicles_only, sensor_id)
    for i, o in enumerate(objects):
        if o.track_id == follower_id:
            if lead[i] < 0:
                return None
            return LeadInfo(follower_id, objects[lead[i]].track_id, float(gap[i]), lane_ids[i])
    return None
