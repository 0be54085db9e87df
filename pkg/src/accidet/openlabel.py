"""Parser, serializer and validator for the OpenLABEL annotation subset.

Document layout (UTF-8 JSON)::

    {"openlabel": {
        "metadata": {"schema_version": "1.0.0", "coordinate_system": "road"},
        "frames": {
            "0": {"timestamp": 0.0,
                  "objects": {
                      "v1": {"category": "car",
                             "cuboid": [x, y, z, length, width, height, yaw],
                             "box2d": [u, v, w, h],
                             "attributes": {"sensor_id": "cam_1",
                                            "speed_kmh": 88.2,
                                            "num_points": 120,
                                            "track_history": [[x, y, z], ...]}}}}}}}

An object entry may also be a list of such dicts when several sensors observe
the same track in one frame. Keys the schema does not know are kept in
``extensions`` maps and written back unchanged.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

SCHEMA_VERSION = "1.0.0"
CATEGORIES = ("car", "truck", "bus", "motorcycle", "bicycle", "pedestrian")
NOMINAL_FRAME_RATE_HZ = 25.0
DECIMALS = 6
DEFAULT_SENSOR = "default"


class OpenLabelError(ValueError):
    """Base class for annotation parse failures."""


class SchemaError(OpenLabelError):
    """A required field is missing or has the wrong type."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class OrderError(OpenLabelError):
    """Frame indices or timestamps are not strictly increasing."""


class CategoryError(SchemaError):
    """Object category outside the six-class set."""


@dataclass(frozen=True)
class Cuboid:
    x: float
    y: float
    z: float
    length: float
    width: float
    height: float
    yaw: float

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.z, self.length, self.width, self.height, self.yaw]


@dataclass(frozen=True)
class ObjectAnnotation:
    track_id: str
    category: str
    cuboid: Cuboid
    sensor_id: str = DEFAULT_SENSOR
    box2d: tuple[float, float, float, float] | None = None
    speed_kmh: float | None = None
    num_points: int | None = None
    track_history: tuple[tuple[float, float, float], ...] | None = None
    extra_attributes: dict[str, Any] = field(default_factory=dict)
    extensions: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int
    timestamp: float
    objects: tuple[ObjectAnnotation, ...] = ()
    extensions: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Metadata:
    schema_version: str = SCHEMA_VERSION
    coordinate_system: str = "road"
    extensions: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class AnnotationFile:
    metadata: Metadata = field(default_factory=Metadata)
    frames: tuple[FrameRecord, ...] = ()
    extensions: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Issue:
    kind: str
    track_id: str | None
    frame_index: int | None
    detail: str = ""
    sensor_id: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "track_id": self.track_id,
            "frame_index": self.frame_index,
            "sensor_id": self.sensor_id,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Issue, ...] = ()
    warnings: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "violations": [v.to_dict() for v in self.violations],
            "warnings": [w.to_dict() for w in self.warnings],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- parsing


def _reject_constant(name):
    raise SchemaError("<document>", f"non-finite number {name} not allowed")


def _pairs_to_map(pairs, path: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in pairs:
        if key in out:
            raise SchemaError(f"{path}.{key}", "duplicate key")
        out[key] = value
    return out


def _expect_pairs(value, path: str) -> list:
    if not isinstance(value, _Pairs):
        raise SchemaError(path, "expected an object")
    return value


class _Pairs(list):
    """Marks a JSON object decoded as an ordered list of (key, value)."""


def _plain(value):
    """Turn decoded pair-lists back into ordinary dicts (for extensions)."""
    if isinstance(value, _Pairs):
        return {k: _plain(v) for k, v in value}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {type(value).__name__}")
    return value


def _string(value, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(path, f"expected a string, got {type(value).__name__}")
    return value


def _numbers(value, n: int, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or isinstance(value, _Pairs) or len(value) != n:
        raise SchemaError(path, f"expected a list of {n} numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


_OBJECT_KEYS = {"category", "cuboid", "box2d", "attributes"}
_ATTRIBUTE_KEYS = {"sensor_id", "speed_kmh", "num_points", "track_history"}


def _parse_object(track_id: str, raw, path: str) -> ObjectAnnotation:
    fields = _pairs_to_map(_expect_pairs(raw, path), path)
    if "category" not in fields:
        raise SchemaError(f"{path}.category", "missing required field")
    category = _string(fields["category"], f"{path}.category")
    if category not in CATEGORIES:
        raise CategoryError(f"{path}.category", f"unknown category {category!r}")
    if "cuboid" not in fields:
        raise SchemaError(f"{path}.cuboid", "missing required field")
    values = _numbers(fields["cuboid"], 7, f"{path}.cuboid")
    cuboid = Cuboid(*values)
    for name in ("length", "width", "height"):
        if not getattr(cuboid, name) > 0:
            raise SchemaError(f"{path}.cuboid", f"{name} must be > 0")
    box2d = None
    if fields.get("box2d") is not None:
        box2d = _numbers(fields["box2d"], 4, f"{path}.box2d")

    sensor_id = DEFAULT_SENSOR
    speed_kmh = None
    num_points = None
    history = None
    extra: dict[str, Any] = {}
    if "attributes" in fields:
        apath = f"{path}.attributes"
        attrs = _pairs_to_map(_expect_pairs(fields["attributes"], apath), apath)
        if "sensor_id" in attrs:
            sensor_id = _string(attrs["sensor_id"], f"{apath}.sensor_id")
        if attrs.get("speed_kmh") is not None:
            speed_kmh = _number(attrs["speed_kmh"], f"{apath}.speed_kmh")
        if attrs.get("num_points") is not None:
            num_points = _integer(attrs["num_points"], f"{apath}.num_points")
            if num_points < 0:
                raise SchemaError(f"{apath}.num_points", "must be >= 0")
        if attrs.get("track_history") is not None:
            hpath = f"{apath}.track_history"
            raw_hist = attrs["track_history"]
            if not isinstance(raw_hist, list) or isinstance(raw_hist, _Pairs):
                raise SchemaError(hpath, "expected a list of [x, y, z] points")
            history = tuple(
                _numbers(p, 3, f"{hpath}[{i}]") for i, p in enumerate(raw_hist)
            )
        extra = {k: _plain(v) for k, v in attrs.items() if k not in _ATTRIBUTE_KEYS}
    ext = {k: _plain(v) for k, v in fields.items() if k not in _OBJECT_KEYS}
    return ObjectAnnotation(
        track_id=track_id,
        category=category,
        cuboid=cuboid,
        sensor_id=sensor_id,
        box2d=box2d,
        speed_kmh=speed_kmh,
        num_points=num_points,
        track_history=history,
        extra_attributes=extra,
        extensions=ext,
    )


def _parse_frame(key: str, raw, path: str) -> FrameRecord:
    try:
        frame_index = int(key)
    except ValueError:
        raise SchemaError(path, f"frame key {key!r} is not an integer") from None
    if str(frame_index) != key.strip() or frame_index < 0:
        raise SchemaError(path, f"frame key {key!r} is not a canonical non-negative integer")
    fields = _pairs_to_map(_expect_pairs(raw, path), path)
    if "timestamp" not in fields:
        raise SchemaError(f"{path}.timestamp", "missing required field")
    timestamp = _number(fields["timestamp"], f"{path}.timestamp")
    objects: list[ObjectAnnotation] = []
    if fields.get("objects") is not None:
        opath = f"{path}.objects"
        for track_id, entry in _expect_pairs(fields["objects"], opath):
            epath = f"{opath}[{track_id}]"
            if isinstance(entry, list) and not isinstance(entry, _Pairs):
                for i, sub in enumerate(entry):
                    objects.append(_parse_object(track_id, sub, f"{epath}[{i}]"))
            else:
                objects.append(_parse_object(track_id, entry, epath))
    ext = {k: _plain(v) for k, v in fields.items() if k not in {"timestamp", "objects"}}
    return FrameRecord(frame_index, timestamp, tuple(objects), ext)


def parse(data: bytes | str) -> AnnotationFile:
    """Parse and validate an annotation document.

    Raises SchemaError, OrderError or CategoryError.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data, object_pairs_hook=_Pairs, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SchemaError("<document>", f"not valid JSON ({exc})") from None
    root = _pairs_to_map(_expect_pairs(doc, "<root>"), "<root>")
    if "openlabel" not in root:
        raise SchemaError("openlabel", "missing required field")
    body = _pairs_to_map(_expect_pairs(root["openlabel"], "openlabel"), "openlabel")

    metadata = Metadata()
    if "metadata" in body:
        mpath = "openlabel.metadata"
        meta = _pairs_to_map(_expect_pairs(body["metadata"], mpath), mpath)
        metadata = Metadata(
            schema_version=_string(meta.get("schema_version", SCHEMA_VERSION), f"{mpath}.schema_version"),
            coordinate_system=_string(meta.get("coordinate_system", "road"), f"{mpath}.coordinate_system"),
            extensions={k: _plain(v) for k, v in meta.items()
                        if k not in {"schema_version", "coordinate_system"}},
        )
    if "frames" not in body:
        raise SchemaError("openlabel.frames", "missing required field")
    frames: list[FrameRecord] = []
    for key, raw in _expect_pairs(body["frames"], "openlabel.frames"):
        frame = _parse_frame(key, raw, f"openlabel.frames[{key}]")
        if frames:
            prev = frames[-1]
            if frame.frame_index <= prev.frame_index:
                raise OrderError(
                    f"frame {frame.frame_index} follows frame {prev.frame_index}")
            if frame.timestamp <= prev.timestamp:
                raise OrderError(
                    f"timestamp {frame.timestamp} of frame {frame.frame_index} "
                    f"is not after {prev.timestamp}")
        frames.append(frame)
    ext = {k: _plain(v) for k, v in body.items() if k not in {"metadata", "frames"}}
    return AnnotationFile(metadata, tuple(frames), ext)


def load(path: str | Path) -> AnnotationFile:
    return parse(Path(path).read_bytes())


# ----------------------------------------------------------- serializing


def _fixed(x: float) -> float:
    # + 0.0 folds -0.0 into 0.0
    return round(float(x), DECIMALS) + 0.0


def _canonical(value):
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return _fixed(value)
    if isinstance(value, dict):
        return {k: _canonical(value[k]) for k in sorted(value)}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _object_dict(obj: ObjectAnnotation) -> dict[str, Any]:
    attrs: dict[str, Any] = dict(obj.extra_attributes)
    attrs["sensor_id"] = obj.sensor_id
    if obj.speed_kmh is not None:
        attrs["speed_kmh"] = float(obj.speed_kmh)
    if obj.num_points is not None:
        attrs["num_points"] = int(obj.num_points)
    if obj.track_history is not None:
        attrs["track_history"] = [[float(c) for c in p] for p in obj.track_history]
    out: dict[str, Any] = dict(obj.extensions)
    out["category"] = obj.category
    out["cuboid"] = [float(c) for c in obj.cuboid.as_list()]
    if obj.box2d is not None:
        out["box2d"] = [float(c) for c in obj.box2d]
    out["attributes"] = attrs
    return _canonical(out)


def _frame_dict(frame: FrameRecord) -> dict[str, Any]:
    grouped: dict[str, list[ObjectAnnotation]] = defaultdict(list)
    for obj in frame.objects:
        grouped[obj.track_id].append(obj)
    objects: dict[str, Any] = {}
    for track_id in sorted(grouped):
        entries = sorted(grouped[track_id], key=lambda o: o.sensor_id)
        if len(entries) == 1:
            objects[track_id] = _object_dict(entries[0])
        else:
            objects[track_id] = [_object_dict(o) for o in entries]
    out: dict[str, Any] = _canonical(dict(frame.extensions))
    out["objects"] = objects
    out["timestamp"] = _fixed(frame.timestamp)
    return {k: out[k] for k in sorted(out)}


def serialize(annotation: AnnotationFile) -> bytes:
    """Canonical bytes: sorted keys, frames in index order, 6-decimal floats."""
    meta = dict(annotation.metadata.extensions)
    meta["schema_version"] = annotation.metadata.schema_version
    meta["coordinate_system"] = annotation.metadata.coordinate_system
    body: dict[str, Any] = _canonical(dict(annotation.extensions))
    body["metadata"] = _canonical(meta)
    body["frames"] = {
        str(f.frame_index): _frame_dict(f)
        for f in sorted(annotation.frames, key=lambda f: f.frame_index)
    }
    body = {k: body[k] for k in sorted(body)}
    text = json.dumps({"openlabel": body}, ensure_ascii=False, separators=(",", ":"),
                      allow_nan=False)
    return (text + "\n").encode("utf-8")


def dump(annotation: AnnotationFile, path: str | Path) -> None:
    Path(path).write_bytes(serialize(annotation))


def quantize(annotation: AnnotationFile) -> AnnotationFile:
    """The value ``parse(serialize(annotation))`` is expected to equal."""
    return parse(serialize(annotation))


# ------------------------------------------------------------ validation


def validate(
    annotation: AnnotationFile,
    jump_threshold: float = 10.0,
    max_gap_frames: int = 25,
    frame_rate_hz: float = NOMINAL_FRAME_RATE_HZ,
    rate_tolerance: float = 0.1,
) -> ValidationReport:
    """Continuity, frame-rate and duplicate-ID checks. Never raises.

    A position jump is measured between consecutive appearances of one
    (sensor, track) pair; the threshold scales with the number of frames
    elapsed, so a reappearance after occlusion is not a jump by itself.
    """
    violations: list[Issue] = []
    warnings: list[Issue] = []
    nominal = 1.0 / frame_rate_hz

    prev_frame: FrameRecord | None = None
    last_seen: dict[tuple[str, str], tuple[int, Cuboid]] = {}
    for frame in annotation.frames:
        if prev_frame is not None:
            steps = frame.frame_index - prev_frame.frame_index
            gap = (frame.timestamp - prev_frame.timestamp) / max(steps, 1)
            if abs(gap - nominal) > rate_tolerance * nominal:
                warnings.append(Issue(
                    "frame_rate", None, frame.frame_index,
                    f"inter-frame gap {gap:.6f} s vs nominal {nominal:.6f} s"))
        prev_frame = frame

        seen: set[tuple[str, str]] = set()
        for obj in frame.objects:
            key = (obj.sensor_id, obj.track_id)
            if key in seen:
                violations.append(Issue(
                    "duplicate_track_id", obj.track_id, frame.frame_index,
                    "track appears twice for one sensor", obj.sensor_id))
                continue
            seen.add(key)
            if key in last_seen:
                idx, c = last_seen[key]
                steps = frame.frame_index - idx
                cur = obj.cuboid
                dist = math.sqrt((cur.x - c.x) ** 2 + (cur.y - c.y) ** 2 + (cur.z - c.z) ** 2)
                if dist > jump_threshold * steps:
                    violations.append(Issue(
                        "position_jump", obj.track_id, frame.frame_index,
                        f"moved {dist:.3f} m over {steps} frame(s)", obj.sensor_id))
                if steps - 1 > max_gap_frames:
                    warnings.append(Issue(
                        "track_gap", obj.track_id, frame.frame_index,
                        f"missing for {steps - 1} frames", obj.sensor_id))
            last_seen[key] = (frame.frame_index, obj.cuboid)
    return ValidationReport(tuple(violations), tuple(warnings))
