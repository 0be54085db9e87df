"""Acceptance gate: one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v -s`` (or plain ``pytest -v``; the
lines are written straight to the terminal) to see the summary.
"""

import math
import random
import time
from dataclasses import replace

import numpy as np
import pytest
from conftest import FPS, frame, lane_y, obj, track_from_xy
from oracles import frame_rules_oracle, maximal_runs, stats_oracle, straight_lane_of

from accidet import openlabel
from accidet.digital_twin import (
    KinematicsConfig,
    annotation_from_snapshots,
    build_tracks,
    estimate_acceleration,
    heading_deviation,
    snapshots_from_annotation,
)
from accidet.event_pipeline import Candidate, GroundTruthStub, confirm, run_pipeline
from accidet.reporting import ClassificationMetrics, bench, compute_stats, default_origin, score_events
from accidet.rule_engine import RuleConfig, evaluate_rules
from accidet.scenario_gen import KINDS, Motion, ScenarioSpec, export, generate


def report(capsys, number, ok, text):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] AC{number} {text}")
    assert ok, text


# ---------------------------------------------------------------- 1 rules


def _random_rule_frame(rng):
    lane = rng.choice([k for k in range(-6, 7) if k != 0])
    sign = 1 if lane > 0 else -1
    v_min = 15 / 3.6
    x_f = rng.randint(300 * 64, 700 * 64) / 64
    l_f = rng.randint(12, 60) / 4
    v_f = rng.choice([v_min, 0.0, rng.randint(0, 200) / 4])
    vehicles = [("f", lane, x_f, l_f, v_f)]
    pos = x_f + sign * l_f / 2
    for k in range(rng.choice([0, 1, 1, 2, 3])):
        length = rng.randint(12, 60) / 4
        gap = rng.choice([2.0, 0.0, rng.randint(0, 64 * 60) / 64, rng.randint(0, 64 * 3) / 64])
        speed = rng.choice([v_f, rng.randint(0, 200) / 4])
        x = pos + sign * (gap + length / 2)
        vehicles.append((f"a{k}", lane, x, length, speed))
        pos = x + sign * length / 2
    # a vehicle behind and one in the neighbouring lane
    vehicles.append(("behind", lane, x_f - sign * rng.randint(20, 60), 4.5, rng.randint(0, 200) / 4))
    other = lane + 1 if abs(lane + 1) <= 6 and lane + 1 != 0 else lane - 1
    vehicles.append(("side", other, x_f + rng.randint(-10, 10), 4.5, rng.randint(0, 200) / 4))
    snap = frame([obj(t, x, lane_y(ln), length=length, yaw=0.0 if ln > 0 else math.pi, speed=v)
                  for t, ln, x, length, v in vehicles])
    return vehicles, snap


def test_ac1_rule_fidelity(capsys, lane_map):
    rng = random.Random(2024)
    contexts = mismatches = 0
    configs = [RuleConfig(), RuleConfig(rule4_comparator="leq"), RuleConfig(gap_rule_velocity_units="mps")]
    for k in range(1000):
        cfg = configs[k % 3]
        vehicles, snap = _random_rule_frame(rng)
        got = evaluate_rules(snap, lane_map, cfg)
        want = frame_rules_oracle(vehicles, v_min=cfg.v_min_mps, d_thresh=cfg.d_thresh_m,
                                  ttc_thresh=cfg.ttc_thresh_s, rule4=cfg.rule4_comparator,
                                  kmh=cfg.gap_rule_velocity_units == "kmh")
        for tid, rules in want.items():
            contexts += 1
            mismatches += got[tid].rules != rules
    report(capsys, 1, mismatches == 0 and contexts >= 1000,
           f"rule fidelity: {mismatches} mismatches over {contexts} vehicle contexts in 1000 frames")


# ---------------------------------------------------------- 2 confirmation


def test_ac2_confirmation(capsys):
    rng = np.random.default_rng(7)
    bad = {1: 0, 5: 0}
    for _ in range(10_000):
        n = int(rng.integers(1, 30))
        frames = np.nonzero(rng.random(n) < 0.9)[0] + int(rng.integers(0, 1000))
        conf = dict(zip(frames.tolist(), rng.choice([0.8, 0.79, 0.81, 0.95, 0.5], len(frames)).tolist()))
        cands = [Candidate(f, "cam_1", "accident", "k", c, "learning_based") for f, c in conf.items()]
        for gap in bad:
            got = sorted(e.frame_span for e in confirm(cands, gap_frames=gap))
            bad[gap] += got != maximal_runs(conf, gap_frames=gap)
    report(capsys, 2, not any(bad.values()),
           f"confirmation: {bad[1]} mismatches (maximal runs), {bad[5]} (5-frame chaining), 10000 sequences")


# ------------------------------------------------------------- 3 end to end


def test_ac3_end_to_end(capsys, lane_map):
    plan = {"rear_end": ["accident"], "breakdown_shoulder": ["breakdown_shoulder"],
            "standing_in_lane": ["standing_in_driving_lane"], "tailgate": ["tailgating"],
            "normal_flow": ["accident"]}
    t0 = time.perf_counter()
    totals = {}
    accidents_normal = 0
    for kind, kinds in plan.items():
        tp = fp = fn = 0
        for seed in range(10):
            frames, truth = generate(ScenarioSpec(kind=kind, seed=seed))
            res = run_pipeline(frames, lane_map, detector=GroundTruthStub(truth))
            m = score_events(res.events, truth, kinds)
            tp, fp, fn = tp + m.true_positives, fp + m.false_positives, fn + m.false_negatives
            if kind == "normal_flow":
                accidents_normal += sum(e.kind == "accident" for e in res.events)
        totals[kind] = ClassificationMetrics(tp, fp, fn)
    elapsed = time.perf_counter() - t0
    gated = ("rear_end", "breakdown_shoulder", "standing_in_lane")
    ok = all(totals[k].recall is not None and totals[k].recall >= 0.9 for k in gated)
    ok = ok and accidents_normal == 0 and elapsed < 60
    detail = ", ".join(f"{k} R={totals[k].recall:.2f}" for k in gated)
    report(capsys, 3, ok, f"end to end: {detail}, tailgate R={totals['tailgate'].recall:.2f}, "
                          f"normal_flow accidents={accidents_normal}, {elapsed:.1f} s")


# ---------------------------------------------------------------- 4 metrics


def test_ac4_metrics(capsys):
    p = ClassificationMetrics(116, 4, 0).precision
    rng = random.Random(3)
    f1_bad = 0
    for _ in range(100):
        tp, fp, fn = rng.randint(1, 500), rng.randint(0, 500), rng.randint(0, 500)
        m = ClassificationMetrics(tp, fp, fn)
        f1_bad += m.f1 != 2 * m.precision * m.recall / (m.precision + m.recall)
    ok = f"{100 * p:.2f}" == "96.67" and f1_bad == 0
    report(capsys, 4, ok, f"metrics: precision {100 * p:.2f}% for 116/4, F1 identity failures {f1_bad}/100")


# ------------------------------------------------------------- 5 kinematics


def _rotate(xy, theta):
    c, s = math.cos(theta), math.sin(theta)
    return [(c * x - s * y, s * x + c * y) for x, y in xy]


def test_ac5_kinematics(capsys):
    rng = np.random.default_rng(11)
    worst_speed = 0.0
    for _ in range(50):
        v = rng.uniform(0.5, 60.0)
        ang = rng.uniform(-math.pi, math.pi)
        x0, y0 = rng.uniform(-500, 500, 2)
        t = np.arange(int(rng.integers(3, 120))) / FPS
        xy = list(zip(x0 + v * math.cos(ang) * t, y0 + v * math.sin(ang) * t))
        est = track_from_xy(xy).kinematics().speed
        worst_speed = max(worst_speed, float(np.max(np.abs(est - v) / v)))

    worst_acc = 0.0
    cfg = KinematicsConfig()
    for v0 in (25.0, 30.0, 40.0):
        m = Motion(0.0, v0).change(1.0, -6.0)
        stop = m.rest_time()
        t = np.arange(int((stop + 2) * FPS)) / FPS
        s, _, _ = m.evaluate(t)
        tr = track_from_xy(list(zip(s, np.zeros_like(s))))
        margin = (cfg.speed_half_window * 2 + cfg.accel_window) / FPS
        for i in np.nonzero((t > 1.0 + margin) & (t < stop - margin))[0]:
            worst_acc = max(worst_acc, abs(estimate_acceleration(tr, int(i), cfg) + 6.0))

    worst_rot = 0.0
    for _ in range(20):
        turns = np.cumsum(rng.normal(0, 0.05, 80))
        step = rng.uniform(0.5, 1.5)
        xy = list(zip(np.cumsum(step * np.cos(turns)), np.cumsum(step * np.sin(turns))))
        theta = rng.uniform(0, 2 * math.pi)
        a, b = track_from_xy(xy), track_from_xy(_rotate(xy, theta))
        for i in range(12, 80):
            worst_rot = max(worst_rot, abs(heading_deviation(a, i) - heading_deviation(b, i)))

    ok = worst_speed <= 1e-9 and worst_acc <= 0.5 and worst_rot <= 1e-9
    report(capsys, 5, ok, f"kinematics: speed rel err {worst_speed:.1e}, -6 m/s^2 err {worst_acc:.3f}, "
                          f"rotation err {worst_rot:.1e} deg")


# ------------------------------------------------------------- 6 throughput


def test_ac6_throughput(capsys, lane_map):
    spec = ScenarioSpec(kind="normal_flow", duration_s=22_500 / FPS, vehicle_count=math.ceil(24 * 1.1), seed=0)
    frames, _ = generate(spec)
    per_frame = sum(len(f.objects) for f in frames) / len(frames)
    res = bench(frames, lane_map)
    ok = len(frames) == 22_500 and res["frames_per_second"] >= 25.0
    report(capsys, 6, ok, f"throughput: {res['frames_per_second']:.0f} frames/s over {len(frames)} frames, "
                          f"{per_frame:.1f} objects/frame, {res['total_s']:.2f} s")


# --------------------------------------------------------------- 7 round trip


def test_ac7_round_trip_corpus(capsys):
    diffs = 0
    for k in range(200):
        spec = ScenarioSpec(kind=KINDS[k % len(KINDS)], seed=k, duration_s=3.0, vehicle_count=6,
                            sensors=1 + k % 3, dropout=0.1 if k % 4 == 0 else 0.0)
        frames, truth = generate(spec)
        doc, _ = export(frames, truth)
        parsed = openlabel.parse(doc)
        diffs += openlabel.serialize(parsed) != doc
        diffs += openlabel.parse(openlabel.serialize(parsed)) != parsed
        diffs += snapshots_from_annotation(parsed) != frames
    report(capsys, 7, diffs == 0, f"round trip: {diffs} diffs over 200 generated files")


# ------------------------------------------------------------- 8 statistics


def _random_tracks(rng):
    tracks = []
    for k in range(rng.randint(1, 12)):
        lane = rng.choice([-7, -4, -1, 1, 3, 7, 99])
        y0 = lane_y(lane) if lane != 99 else 60.0
        sign = 1 if lane > 0 else -1
        n = rng.randint(2, 150)
        x0 = rng.uniform(50, 950)
        v = rng.choice([0.0, rng.uniform(1, 50)])
        xy = [(x0 + sign * v * i / FPS + rng.gauss(0, 0.05), y0 + rng.gauss(0, 0.2)) for i in range(n)]
        t0 = rng.randint(0, 50) / FPS
        tr = track_from_xy(xy, track_id=f"t{k}", category=rng.choice(openlabel.CATEGORIES), t0=t0)
        sensor = rng.choice(["cam_1", "cam_2"])
        tr = replace(tr, states=[replace(s, sensor_id=sensor) for s in tr.states])
        tracks.append(tr)
    return tracks


def test_ac8_statistics_oracle(capsys, lane_map):
    rng = random.Random(8)
    lane_of = straight_lane_of(lane_map)
    keys = ("unique_vehicle_count", "per_class_counts", "per_lane_counts", "labeling_distance_histogram",
            "labels_per_frame_histogram", "track_length_histogram", "total_track_length_km", "speed_stats")
    mismatches = []
    for run in range(20):
        tracks = _random_tracks(rng)
        rep = compute_stats(tracks, lane_map)
        ref = stats_oracle(tracks, lane_of, lambda tr: tr.kinematics().speed.tolist(), default_origin(lane_map))
        got = {k: getattr(rep, k) for k in keys}
        mismatches += [(run, k) for k in keys if got[k] != ref[k]]
    report(capsys, 8, not mismatches, f"statistics: {len(mismatches)} mismatching fields over 20 track sets"
                                      + (f" {mismatches[:5]}" if mismatches else ""))


def test_annotation_snapshot_helpers_agree():
    frames, _ = generate(ScenarioSpec(kind="tailgate", seed=1, duration_s=2, vehicle_count=3))
    assert build_tracks(snapshots_from_annotation(annotation_from_snapshots(frames))).keys() \
        == build_tracks(frames).keys()


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
