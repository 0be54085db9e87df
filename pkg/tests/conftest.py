from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from accidet.digital_twin import FrameSnapshot, ObjectState, Track  # noqa: E402
from accidet.lane_model import build_default_lane_map  # noqa: E402

FPS = 25.0


def obj(track_id, x, y, t=0.0, category="car", length=4.5, yaw=0.0, sensor="default", frame=0,
        speed=None, **kw):
    return ObjectState(track_id=track_id, category=category, timestamp=t, position=(x, y, 0.0),
                       dimensions=(length, 1.9, 1.5), yaw=yaw, sensor_id=sensor, frame_index=frame,
                       speed_mps=speed, **kw)


def track_from_xy(xy, track_id="A", fps=FPS, category="car", t0=0.0):
    states = [ObjectState(track_id, category, t0 + k / fps, (float(x), float(y), 0.0),
                          (4.5, 1.9, 1.5), 0.0, frame_index=k) for k, (x, y) in enumerate(xy)]
    return Track(track_id, states)


def frame(objects, index=0, t=None):
    return FrameSnapshot(index / FPS if t is None else t, index, tuple(objects))


def lane_y(lane_id, lane_map=None):
    lane_map = lane_map or build_default_lane_map()
    return lane_map.lane(lane_id).centerline[0][1]


@pytest.fixture(scope="session")
def lane_map():
    return build_default_lane_map()
