"""Independent brute-force references used by the tests.

Nothing here calls package kernels; each oracle is written straight from the
definition with plain Python loops.
"""

from __future__ import annotations

import math
from collections import Counter


def rules_oracle(v_i, v_lead, gap, ahead_speeds, v_min=15 / 3.6, d_thresh=2.0, ttc_thresh=1.5,
                 rule4="geq", kmh=True):
    """The six predicates for one vehicle with a lead; speeds in m/s."""
    if v_lead is None:
        return (v_i >= v_min, False, False, False, False, False)
    r1 = v_i >= v_min
    r2 = v_i > v_lead
    r3 = all(v_i >= v for v in ahead_speeds)
    r4 = gap >= d_thresh if rule4 == "geq" else gap <= d_thresh
    factor = 3.6 if kmh else 1.0
    # written the way the predicate reads: d < ((v_i - v_lead) / 30)^2
    r5 = gap < (((v_i - v_lead) * factor) / 30.0) ** 2
    ttc = gap / (v_i - v_lead) if v_i - v_lead > 0 else math.inf
    r6 = ttc <= ttc_thresh
    return (r1, r2, r3, r4, r5, r6)


def maximal_runs(confidences: dict[int, float], min_frames=3, threshold=0.8, gap_frames=1):
    """Spans of hit clusters that contain ``min_frames`` consecutive hit frames.

    Hits are frames with confidence > threshold. Two hits belong to the same
    cluster when fewer than ``gap_frames`` frames are missing between them (gap_frames=1:
    strictly consecutive, i.e. maximal runs).
    """
    hits = sorted(f for f, c in confidences.items() if c > threshold)
    clusters: list[list[int]] = []
    for f in hits:
        if clusters and f - clusters[-1][-1] <= gap_frames:
            clusters[-1].append(f)
        else:
            clusters.append([f])
    out = []
    for cl in clusters:
        best = 1
        cur = 1
        for a, b in zip(cl, cl[1:]):
            cur = cur + 1 if b == a + 1 else 1
            best = max(best, cur)
        # windowed scan: any start s with s..s+min_frames-1 all hits
        has_window = any(all((s + k) in set(cl) for k in range(min_frames)) for s in cl)
        assert has_window == (best >= min_frames)
        if has_window:
            out.append((cl[0], cl[-1]))
    return out


def track_length(points) -> float:
    total = 0.0
    parts = []
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        parts.append(math.sqrt((x1 - x0) * (x1 - x0) + (y1 - y0) * (y1 - y0)))
    total = math.fsum(parts)
    return total


def bucket(value, width):
    return math.floor(value / width) * width + 0.0


def stats_oracle(tracks, lane_of, speeds_of, origin, length_bin=25.0, dist_bin=20.0, labels_bin=5,
                 vehicles=frozenset({"car", "truck", "bus", "motorcycle"})):
    """Histograms and aggregates over a list of Track objects, by loops.

    ``lane_of(x, y)`` gives the lane ID or None; ``speeds_of(track)`` gives the
    per-state speed list (m/s) the estimator under test agrees on.
    """
    out = {}
    out["unique_vehicle_count"] = sum(1 for tr in tracks if tr.states[0].category in vehicles)
    out["per_class_counts"] = dict(Counter(tr.states[0].category for tr in tracks))
    lanes = Counter()
    dist = Counter()
    per_frame = Counter()
    lengths = []
    for tr in tracks:
        pts = [(s.position[0], s.position[1]) for s in tr.states]
        lengths.append(track_length(pts))
        for s in tr.states:
            lid = lane_of(s.position[0], s.position[1])
            lanes["off_road" if lid is None else lid] += 1
            d = math.sqrt((s.position[0] - origin[0]) ** 2 + (s.position[1] - origin[1]) ** 2)
            dist[bucket(d, dist_bin)] += 1
            per_frame[(s.sensor_id, s.frame_index)] += 1
    out["per_lane_counts"] = dict(lanes)
    out["labeling_distance_histogram"] = dict(dist)
    out["labels_per_frame_histogram"] = dict(Counter(bucket(c, labels_bin) for c in per_frame.values()))
    out["track_length_histogram"] = dict(Counter(bucket(v, length_bin) for v in lengths))
    out["total_track_length_km"] = math.fsum(lengths) / 1000.0
    by_class: dict[str, list[float]] = {}
    for tr in tracks:
        for v in speeds_of(tr):
            if not math.isnan(v):
                by_class.setdefault(tr.states[0].category, []).append(v * 3.6)
    out["speed_stats"] = {c: {"mean": math.fsum(v) / len(v), "max": max(v)} for c, v in by_class.items()}
    return out


def straight_lane_of(lane_map):
    """Lane lookup for maps of straight lanes parallel to x, by loops.

    Nearest centerline within half width plus slack; ties go to the lower |id|.
    """
    lanes = []
    for lane in lane_map.lanes:
        (x0, y0), (x1, y1) = lane.centerline[0], lane.centerline[-1]
        assert y0 == y1, "oracle only handles straight lanes along x"
        lanes.append((abs(lane.lane_id), lane.lane_id, min(x0, x1), max(x0, x1), y0,
                      lane.width / 2 + lane_map.slack))

    def lane_of(x, y):
        best = None
        for _, lid, xa, xb, yc, tol in sorted(lanes):
            cx = min(max(x, xa), xb)
            d = math.sqrt((x - cx) ** 2 + (y - yc) ** 2)
            if d <= tol and (best is None or d < best[0]):
                best = (d, lid)
        return None if best is None else best[1]

    return lane_of


def frame_rules_oracle(vehicles, **rule_kw):
    """Rules for every vehicle in a frame of lane-aligned vehicles.

    ``vehicles``: list of (track_id, lane_id, x, length, speed). Northbound
    lanes (id > 0) travel +x, southbound -x. Lead and gap come from a plain
    scan over the same lane.
    """
    out = {}
    for tid, lane, x, length, v in vehicles:
        sign = 1.0 if lane > 0 else -1.0
        ahead = [(sign * (xo - x), lo, vo) for t2, l2, xo, lo, vo in vehicles
                 if t2 != tid and l2 == lane and sign * (xo - x) > 0]
        if not ahead:
            out[tid] = rules_oracle(v, None, None, [], **rule_kw)
            continue
        ds, lo, vo = min(ahead)
        gap = max(ds - length / 2 - lo / 2, 0.0)
        out[tid] = rules_oracle(v, vo, gap, [a[2] for a in ahead], **rule_kw)
    return out
