"""Compare the numba and numpy kernel backends.

Kernel timings run both backends in-process on identical inputs. The
end-to-end figure runs ``accidet bench`` in a subprocess per backend, with
``ACCID_DISABLE_NUMBA`` set for the numpy run, so import-time selection is
what gets measured.

    python benchmarks/bench_backends.py --frames 22500 --objects 24
"""

import argparse
import json
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from accidet import kernels
from accidet.kernels import numpy_backend
from accidet.lane_model import build_default_lane_map


def kernel_inputs(n_tracks: int, length: int, group: int, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    n = n_tracks * length
    offsets = np.arange(0, n + 1, length, dtype=np.int64)
    t = np.tile(np.arange(length) / 25.0, n_tracks)
    x = np.cumsum(rng.normal(1.0, 0.05, n))
    y = rng.normal(0.0, 0.1, n)
    lanes = build_default_lane_map().arrays
    goffs = np.arange(0, n + 1, group, dtype=np.int64)
    if goffs[-1] != n:
        goffs = np.append(goffs, n)
    speed, dx, dy = numpy_backend.speed_heading(x, y, t, offsets, 5)
    return {
        "speed_heading": (x, y, t, offsets, 5),
        "acceleration": (speed, t, offsets, 5, 5),
        "fill_heading": (dx, dy, speed, np.zeros(n), offsets, 2.0),
        "heading_deviation": (np.arctan2(dy, dx), offsets, 12),
        "sustained": (speed < 20.0, t, offsets, 5.0),
        "assign_lanes": (rng.uniform(0, 1000, n), rng.uniform(-30, 30, n), lanes["seg_x0"], lanes["seg_y0"],
                         lanes["seg_x1"], lanes["seg_y1"], lanes["seg_lane"], lanes["seg_s0"],
                         lanes["lane_tol"], lanes["lane_order"]),
        "lead_search": (goffs, rng.integers(0, 12, n).astype(np.int64), rng.uniform(0, 1000, n),
                        np.full(n, 4.5), rng.uniform(0, 40, n), np.ones(n, dtype=bool)),
        "nearest_neighbor": (goffs, x, y),
        "pairwise_distances": (x[:500], y[:500]),
        "rule_predicates": (rng.uniform(0, 40, n), rng.uniform(0, 40, n), rng.uniform(0, 50, n),
                            rng.random(n) < 0.8, rng.uniform(0, 40, n), 15 / 3.6, 2.0, 1.5, 3.6, True),
    }


def time_kernels(inputs: dict, repeat: int) -> list[dict]:
    nb = kernels.numba_backend()
    rows = []
    for name in kernels.KERNELS:
        args = inputs[name]
        row = {"kernel": name}
        for label, mod in (("numpy", numpy_backend), ("numba", nb)):
            if mod is None:
                row[label] = None
                continue
            fn = getattr(mod, name)
            fn(*args)  # compile / warm caches
            row[label] = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
        rows.append(row)
    return rows


def time_pipeline(frames: int, objects: float, disable_numba: bool) -> dict:
    env = dict(os.environ)
    env.pop("ACCID_DISABLE_NUMBA", None)
    if disable_numba:
        env["ACCID_DISABLE_NUMBA"] = "1"
    cmd = [sys.executable, "-m", "accidet", "bench", "--frames", str(frames), "--objects", str(objects)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=22500)
    ap.add_argument("--objects", type=float, default=24.0)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-pipeline", action="store_true")
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    args = ap.parse_args(argv)

    n_tracks = max(1, math.ceil(args.objects))
    length = max(2, args.frames // 10)
    rows = time_kernels(kernel_inputs(n_tracks, length, max(2, math.ceil(args.objects))), args.repeat)
    result = {"kernels": rows, "pipeline": {}}
    if not args.skip_pipeline:
        for label, off in (("numba", False), ("numpy", True)):
            result["pipeline"][label] = time_pipeline(args.frames, args.objects, off)

    if args.json:
        print(json.dumps(result, indent=2))
        return 0
    print(f"kernels on {n_tracks * length} states (best of {args.repeat}), milliseconds")
    print(f"{'kernel':<20}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for r in rows:
        a, b = r["numpy"], r["numba"]
        speedup = f"{a / b:.1f}x" if a and b else "-"
        print(f"{r['kernel']:<20}{1e3 * a:>12.3f}{(1e3 * b if b else float('nan')):>12.3f}{speedup:>10}")
    for label, res in result["pipeline"].items():
        print(f"pipeline [{res['backend']}]: {res['frames']} frames, {res['objects_per_frame']:.1f} obj/frame, "
              f"{res['total_s']:.2f} s, {res['frames_per_second']:.0f} frames/s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
