"""``accidet`` command line: validate, detect, stats, score, simulate, bench.

Exit codes: 0 success, 1 validation or schema failure, 2 usage error
(bad flags, missing input file, bad config). Diagnostics go to stderr; data
goes to ``--out`` files or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, openlabel
from .config import AppConfig, load_config
from .rule_engine import ConfigError, RuleConfig, load_rule_config

log = logging.getLogger("accidet")

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _existing(path: str | None, what: str) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {path}")
    return p


def _write(text: str | bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text.decode() if isinstance(text, bytes) else text)
        return
    Path(out).write_bytes(text if isinstance(text, bytes) else text.encode("utf-8"))
    log.info("wrote %s", out)


def _lane_map(args, cfg: AppConfig):
    from .lane_model import LaneMapError, load_lane_map

    source = args.lanes if getattr(args, "lanes", None) else cfg.lanes
    if source not in (None, "default"):
        _existing(source, "lane map")
    try:
        return load_lane_map(source)
    except LaneMapError as exc:
        raise UsageError(f"lane map: {exc}") from None


def _rules(args, cfg: AppConfig) -> RuleConfig:
    source = getattr(args, "rules", None)
    if source is None:
        return cfg.rules
    if source != "default":
        _existing(source, "rule config")
    return load_rule_config(source)


def _frames(path: str):
    from .digital_twin import snapshots_from_annotation

    return snapshots_from_annotation(openlabel.load(_existing(path, "input")))


# ------------------------------------------------------------------ commands


def cmd_validate(args, cfg: AppConfig) -> int:
    path = _existing(args.input, "input")
    try:
        af = openlabel.load(path)
    except openlabel.OpenLabelError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = openlabel.validate(af, jump_threshold=args.jump_threshold,
                                max_gap_frames=args.max_gap_frames)
    _write(report.to_json(), args.out)
    for issue in report.violations:
        print(f"violation: {issue.kind} track={issue.track_id} frame={issue.frame_index} {issue.detail}",
              file=sys.stderr)
    for issue in report.warnings:
        log.warning("%s track=%s frame=%s %s", issue.kind, issue.track_id, issue.frame_index,
                    issue.detail)
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_detect(args, cfg: AppConfig) -> int:
    from .event_pipeline import GroundTruthStub, ReplayDetector, events_to_json, run_pipeline
    from .scenario_gen import load_truth

    frames = _frames(args.input)
    lane_map = _lane_map(args, cfg)
    rules = _rules(args, cfg)
    pipeline = cfg.pipeline
    if args.rba_min_frames is not None:
        pipeline = replace(pipeline, rba_min_frames=args.rba_min_frames)
    detector = None
    if args.detections:
        detector = ReplayDetector.from_file(_existing(args.detections, "detections file"))
    elif args.truth:
        detector = GroundTruthStub(load_truth(_existing(args.truth, "truth file")),
                                   confidence=args.stub_confidence)
    result = run_pipeline(frames, lane_map, rules, detector, pipeline)
    for w in result.warnings:
        log.warning("%s", w)
    _write(events_to_json(result.events), args.out)
    if args.trace:
        result.trace.to_csv(args.trace)
    log.info("%d event(s), %d detector quer%s", len(result.events), result.detector_queries,
             "y" if result.detector_queries == 1 else "ies")
    return EXIT_OK


def cmd_stats(args, cfg: AppConfig) -> int:
    from .digital_twin import build_tracks
    from .reporting import compute_stats

    frames = _frames(args.input)
    lane_map = _lane_map(args, cfg)
    stats_cfg = replace(cfg.stats, rules=_rules(args, cfg))
    if args.origin is not None:
        stats_cfg = replace(stats_cfg, sensor_origin=tuple(args.origin))
    multi = len({o.sensor_id for f in frames for o in f.objects}) > 1
    tracks = build_tracks(frames, by_sensor=multi)
    report = compute_stats(tracks, lane_map, stats_cfg)
    _write(report.to_json(), args.out)
    if args.csv:
        report.to_csv(args.csv)
    return EXIT_OK


def cmd_score(args, cfg: AppConfig) -> int:
    from .event_pipeline import load_events
    from .reporting import score_by_kind, score_events
    from .scenario_gen import load_truth

    events = load_events(_existing(args.events, "events file"))
    truth = load_truth(_existing(args.truth, "truth file"))
    kinds = args.kind or None
    out = {"overall": score_events(events, truth, kinds).to_dict(),
           "per_kind": {k: m.to_dict() for k, m in score_by_kind(events, truth).items()
                        if kinds is None or k in kinds}}
    _write(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args, cfg: AppConfig) -> int:
    from dataclasses import asdict

    from .scenario_gen import ScenarioSpec, SpecError, generate, load_spec, write_scenario

    base = load_spec(_existing(args.spec, "spec file")) if args.spec else ScenarioSpec()
    overrides = {
        "kind": args.kind, "duration_s": args.duration, "vehicle_count": args.vehicles,
        "seed": args.seed, "sensors": args.sensors, "noise": args.noise,
        "dropout": args.dropout, "approach_speed_kmh": args.approach_speed,
        "frame_rate_hz": args.frame_rate,
    }
    try:
        spec = ScenarioSpec(**{**asdict(base), **{k: v for k, v in overrides.items() if v is not None}})
    except SpecError as exc:
        raise UsageError(str(exc)) from None
    frames, truth = generate(spec, _lane_map(args, cfg))
    truth_path = write_scenario(frames, truth, args.out, args.truth_out)
    log.info("%d frames, %d truth event(s) -> %s, %s", len(frames), len(truth.events),
             args.out, truth_path)
    return EXIT_OK


def cmd_bench(args, cfg: AppConfig) -> int:
    from .event_pipeline import GroundTruthStub
    from .reporting import bench
    from .scenario_gen import ScenarioSpec, generate

    lane_map = _lane_map(args, cfg)
    truth = None
    if args.input:
        frames = _frames(args.input)
    else:
        spec = ScenarioSpec(kind="normal_flow", duration_s=args.frames / 25.0,
                            vehicle_count=math.ceil(args.objects * 1.1), seed=args.seed)
        frames, truth = generate(spec, lane_map)
    detector = GroundTruthStub(truth) if (args.include_detector and truth is not None) else None
    result = bench(frames, lane_map, _rules(args, cfg), detector, cfg.pipeline,
                   include_detector=args.include_detector)
    from . import kernels
    result["backend"] = kernels.BACKEND
    result["objects_per_frame"] = (sum(len(f.objects) for f in frames) / len(frames)) if frames else 0.0
    _write(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="accidet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="run config file (YAML/JSON); default $ACCID_CONFIG")
    p.add_argument("--threads", type=int, help="cap numba worker threads")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("-q", "--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def with_maps(sp, rules=True):
        sp.add_argument("--lanes", help="lane map file or 'default'")
        if rules:
            sp.add_argument("--rules", help="rule config file or 'default'")

    sp = sub.add_parser("validate", help="schema and consistency check of an annotation file")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", help="report JSON (default stdout)")
    sp.add_argument("--jump-threshold", type=float, default=10.0, help="metres per frame")
    sp.add_argument("--max-gap-frames", type=int, default=25)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("detect", help="run the detection pipeline")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", help="events JSON (default stdout)")
    with_maps(sp)
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--detections", help="detector replay file")
    src.add_argument("--truth", help="truth file driving the stub detector")
    sp.add_argument("--stub-confidence", type=float, default=0.9)
    sp.add_argument("--rba-min-frames", type=int)
    sp.add_argument("--trace", help="per-state rule trace CSV")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("stats", help="dataset statistics")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", help="report JSON (default stdout)")
    sp.add_argument("--csv", help="also write metric,key,value CSV")
    sp.add_argument("--origin", type=float, nargs=2, metavar=("X", "Y"),
                    help="sensor origin for labeling distances")
    with_maps(sp)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("score", help="score events against ground truth")
    sp.add_argument("--events", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--kind", action="append", help="restrict to kind (repeatable)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("simulate", help="generate a synthetic scenario")
    sp.add_argument("--spec", help="scenario spec file; flags override it")
    sp.add_argument("--kind")
    sp.add_argument("--duration", type=float)
    sp.add_argument("--vehicles", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--sensors", type=int)
    sp.add_argument("--noise", type=float)
    sp.add_argument("--dropout", type=float)
    sp.add_argument("--frame-rate", type=float)
    sp.add_argument("--approach-speed", type=float, help="rear_end approacher speed, km/h")
    sp.add_argument("--out", required=True)
    sp.add_argument("--truth-out", help="default: <out>.truth.json")
    with_maps(sp, rules=False)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bench", help="pipeline throughput")
    sp.add_argument("--in", dest="input", help="annotation file (default: synthetic)")
    sp.add_argument("--frames", type=int, default=22500)
    sp.add_argument("--objects", type=float, default=24.0, help="mean objects per synthetic frame")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--include-detector", action="store_true")
    sp.add_argument("--out")
    with_maps(sp)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else
                                                logging.INFO if args.verbose else logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise UsageError("--threads must be >= 1")
            import numba

            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"accidet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"accidet: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"accidet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except openlabel.OpenLabelError as exc:
        print(f"accidet: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
