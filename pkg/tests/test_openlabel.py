import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accidet import openlabel
from accidet.openlabel import (
    AnnotationFile,
    CategoryError,
    Cuboid,
    FrameRecord,
    ObjectAnnotation,
    OrderError,
    SchemaError,
    parse,
    serialize,
    validate,
)


def doc(frames):
    return json.dumps({"openlabel": {"metadata": {"schema_version": "1.0.0"}, "frames": frames}})


def car(x=0.0, y=0.0, sensor=None, **extra):
    o = {"category": "car", "cuboid": [x, y, 0.0, 4.5, 1.9, 1.5, 0.0]}
    if sensor:
        o["attributes"] = {"sensor_id": sensor}
    o.update(extra)
    return o


def track_doc(xs, dt=0.04, track="a"):
    return doc({str(k): {"timestamp": k * dt, "objects": {track: car(x)}} for k, x in enumerate(xs)})


def test_minimal_document():
    af = parse(doc({"0": {"timestamp": 0.0, "objects": {"v1": car()}}}))
    assert len(af.frames) == 1
    assert len(af.frames[0].objects) == 1
    o = af.frames[0].objects[0]
    assert o.cuboid == Cuboid(0, 0, 0, 4.5, 1.9, 1.5, 0)
    assert o.sensor_id == "default"


def test_frames_out_of_order():
    with pytest.raises(OrderError):
        parse(doc({"0": {"timestamp": 0.0}, "2": {"timestamp": 0.08}, "1": {"timestamp": 0.04}}))


def test_non_increasing_timestamp():
    with pytest.raises(OrderError):
        parse(doc({"0": {"timestamp": 0.1}, "1": {"timestamp": 0.1}}))


@pytest.mark.parametrize("mutate, path", [
    (lambda o: o.pop("cuboid"), "cuboid"),
    (lambda o: o.update(cuboid=[1, 2, 3]), "cuboid"),
    (lambda o: o.update(cuboid=[0, 0, 0, -1, 1, 1, 0]), "cuboid"),
    (lambda o: o.pop("category"), "category"),
    (lambda o: o.update(attributes={"num_points": 1.5}), "num_points"),
])
def test_schema_errors_name_the_field(mutate, path):
    o = car()
    mutate(o)
    with pytest.raises(SchemaError) as err:
        parse(doc({"0": {"timestamp": 0.0, "objects": {"v": o}}}))
    assert path in str(err.value)


def test_unknown_category():
    with pytest.raises(CategoryError):
        parse(doc({"0": {"timestamp": 0.0, "objects": {"v": {**car(), "category": "tram"}}}}))


def test_rejects_nan_and_bad_json():
    with pytest.raises(SchemaError):
        parse('{"openlabel": {"frames": {"0": {"timestamp": NaN}}}}')
    with pytest.raises(SchemaError):
        parse("{not json")


def test_empty_frames():
    af = AnnotationFile()
    text = serialize(af)
    assert json.loads(text)["openlabel"]["frames"] == {}
    assert parse(text) == af


def test_unknown_keys_round_trip():
    raw = doc({"0": {"timestamp": 0.0, "weather": "rain",
                     "objects": {"v": car(occluded=True, attributes={"sensor_id": "c", "color": "red"})}}})
    af = parse(raw)
    o = af.frames[0].objects[0]
    assert o.extensions == {"occluded": True}
    assert o.extra_attributes == {"color": "red"}
    assert af.frames[0].extensions == {"weather": "rain"}
    assert parse(serialize(af)) == af


def test_multi_sensor_entries():
    raw = doc({"0": {"timestamp": 0.0, "objects": {"v": [car(1.0, sensor="cam_2"), car(1.1, sensor="cam_1")]}}})
    af = parse(raw)
    assert [o.sensor_id for o in af.frames[0].objects] == ["cam_2", "cam_1"]
    canonical = parse(serialize(af))
    assert [o.sensor_id for o in canonical.frames[0].objects] == ["cam_1", "cam_2"]
    assert canonical == openlabel.quantize(af)
    assert parse(serialize(canonical)) == canonical


def test_serialize_is_canonical():
    a = parse(doc({"0": {"timestamp": 0.0, "objects": {"b": car(1.0), "a": car(2.0)}}}))
    b = AnnotationFile(a.metadata, (FrameRecord(0, 0.0, tuple(reversed(a.frames[0].objects))),))
    assert serialize(a) == serialize(b)
    assert serialize(a).endswith(b"\n")


finite = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)
positive = st.floats(0.1, 30.0, allow_nan=False)


@st.composite
def annotations(draw):
    n_frames = draw(st.integers(0, 5))
    frames = []
    for k in range(n_frames):
        objs = []
        for tid in draw(st.lists(st.sampled_from("abcde"), unique=True, max_size=4)):
            objs.append(ObjectAnnotation(
                tid, draw(st.sampled_from(openlabel.CATEGORIES)),
                Cuboid(draw(finite), draw(finite), draw(finite), draw(positive), draw(positive),
                       draw(positive), draw(st.floats(-3.14, 3.14))),
                sensor_id=draw(st.sampled_from(["default", "cam_1"])),
                speed_kmh=draw(st.none() | st.floats(0, 300)),
                num_points=draw(st.none() | st.integers(0, 10000)),
            ))
        frames.append(FrameRecord(k, k * 0.04, tuple(objs)))
    return AnnotationFile(frames=tuple(frames))


@settings(max_examples=60, deadline=None)
@given(annotations())
def test_round_trip_property(af):
    q = openlabel.quantize(af)
    once = serialize(q)
    assert parse(once) == q
    assert serialize(parse(once)) == once


def test_validate_clean_track():
    report = validate(parse(track_doc([k * 1.0 for k in range(50)])))
    assert report.ok and not report.violations and not report.warnings


def test_validate_flags_injected_jump():
    xs = [k * 1.0 for k in range(20)]
    xs[10:] = [x + 50.0 for x in xs[10:]]
    report = validate(parse(track_doc(xs)), jump_threshold=10.0)
    jumps = [v for v in report.violations if v.kind == "position_jump"]
    assert [(v.track_id, v.frame_index) for v in jumps] == [("a", 10)]


def test_validate_frame_rate_warning():
    report = validate(parse(track_doc([0.0, 1.0, 2.0], dt=0.08)))
    assert report.ok
    assert any(w.kind == "frame_rate" for w in report.warnings)
    assert 0.08 > 1.1 * (1 / 25)


def test_validate_duplicate_track():
    af = AnnotationFile(frames=(FrameRecord(0, 0.0, (
        ObjectAnnotation("a", "car", Cuboid(0, 0, 0, 4.5, 1.9, 1.5, 0)),
        ObjectAnnotation("a", "car", Cuboid(9, 0, 0, 4.5, 1.9, 1.5, 0)))),))
    report = validate(af)
    assert [v.kind for v in report.violations] == ["duplicate_track_id"]


def test_validate_long_gap_warning_not_jump():
    frames = {str(k): {"timestamp": k * 0.04, "objects": {"a": car(k * 1.0)} if k < 5 or k > 40 else {}}
              for k in range(50)}
    report = validate(parse(doc(frames)))
    assert report.ok
    assert [w.kind for w in report.warnings] == ["track_gap"]


def test_quantize_rounds_to_six_places():
    af = AnnotationFile(frames=(FrameRecord(0, 0.0, (
        ObjectAnnotation("a", "car", Cuboid(1.23456789, -0.0000001, 0, 4.5, 1.9, 1.5, 0)),)),))
    c = openlabel.quantize(af).frames[0].objects[0].cuboid
    assert c.x == 1.234568 and c.y == 0.0 and math.copysign(1, c.y) == 1
