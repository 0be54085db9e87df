"""Pure-numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_numba``.
Per-track arrays are concatenated and delimited by ``offsets`` (length
n_tracks + 1); per-frame arrays are delimited the same way by group offsets.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def _segment_bounds(offsets, n):
    """Start (inclusive) and end (exclusive) of the segment owning each index."""
    counts = np.diff(offsets)
    starts = np.repeat(offsets[:-1], counts)
    ends = np.repeat(offsets[1:], counts)
    assert starts.shape[0] == n
    return starts, ends


def _window_indices(idx, starts, ends, half_window):
    """Difference stencil of width 2*half_window, centred where it fits.

    Near segment ends the stencil keeps its width and slides inward, so
    edge estimates are not noisier than interior ones.
    """
    width = np.minimum(2 * half_window, ends - 1 - starts)
    lo = np.clip(idx - half_window, starts, ends - 1 - width)
    return lo, lo + width


def speed_heading(x, y, t, offsets, half_window):
    n = x.shape[0]
    idx = np.arange(n)
    starts, ends = _segment_bounds(offsets, n)
    lo, hi = _window_indices(idx, starts, ends, half_window)
    dx = x[hi] - x[lo]
    dy = y[hi] - y[lo]
    dt = t[hi] - t[lo]
    with np.errstate(divide="ignore", invalid="ignore"):
        speed = np.sqrt(dx * dx + dy * dy) / dt
    speed[hi == lo] = np.nan
    return speed, dx, dy


def acceleration(speed, t, offsets, half_window, window):
    n = speed.shape[0]
    idx = np.arange(n)
    starts, ends = _segment_bounds(offsets, n)
    lo, hi = _window_indices(idx, starts, ends, half_window)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = (speed[hi] - speed[lo]) / (t[hi] - t[lo])
    raw[hi == lo] = np.nan
    half = window // 2
    acc = np.zeros(n)
    for j in range(-half, half + 1):
        k = np.clip(idx + j, starts, ends - 1)
        acc += raw[k]
    acc /= 2 * half + 1
    acc[(ends - starts) < 3] = np.nan
    return acc


def fill_heading(dx, dy, speed, yaw, offsets, min_speed):
    n = dx.shape[0]
    idx = np.arange(n)
    starts, _ = _segment_bounds(offsets, n)
    valid = speed >= min_speed
    raw = np.arctan2(dy, dx)
    last = np.maximum.accumulate(np.where(valid, idx, -1)) if n else idx
    own = last < starts
    src = np.where(own, idx, last)
    return np.where(own, yaw[src], raw[src])


def _angle_between_deg(h1, h0):
    d = np.abs(h1 - h0) % TWO_PI
    return np.degrees(np.minimum(d, TWO_PI - d))


def heading_deviation(heading, offsets, window):
    n = heading.shape[0]
    idx = np.arange(n)
    starts, _ = _segment_bounds(offsets, n)
    ok = idx - window >= starts
    prev = np.where(ok, idx - window, idx)
    dev = _angle_between_deg(heading, heading[prev])
    dev[~ok] = np.nan
    return dev


def sustained(cond, t, offsets, duration):
    n = cond.shape[0]
    idx = np.arange(n)
    starts, _ = _segment_bounds(offsets, n)
    prev = np.zeros(n, dtype=bool)
    if n:
        prev[1:] = cond[:-1]
    prev[idx == starts] = False
    run_start = cond & ~prev
    last = np.maximum.accumulate(np.where(run_start, idx, -1)) if n else idx
    last = np.maximum(last, 0)
    return cond & (t - t[last] >= duration - 1e-9)


def assign_lanes(px, py, seg_x0, seg_y0, seg_x1, seg_y1, seg_lane, seg_s0,
                 lane_tol, lane_order):
    """Nearest-centerline lane per point.

    ``lane_order`` lists lane indices in tie-break priority; a later lane
    only wins on a strictly smaller lateral distance.
    """
    n = px.shape[0]
    out_lane = np.full(n, -1, dtype=np.int64)
    out_s = np.full(n, np.nan)
    out_d = np.full(n, np.inf)
    sx = seg_x1 - seg_x0
    sy = seg_y1 - seg_y0
    seg_len2 = sx * sx + sy * sy
    seg_len = np.sqrt(seg_len2)
    for lane in lane_order:
        segs = np.nonzero(seg_lane == lane)[0]
        best_d = np.full(n, np.inf)
        best_s = np.full(n, np.nan)
        for k in segs:
            dot = (px - seg_x0[k]) * sx[k] + (py - seg_y0[k]) * sy[k]
            u = np.minimum(np.maximum(dot / seg_len2[k], 0.0), 1.0)
            # one rounding for the arc length keeps gaps exact on grid inputs
            along = np.minimum(np.maximum(dot / seg_len[k], 0.0), seg_len[k])
            qx = seg_x0[k] + u * sx[k]
            qy = seg_y0[k] + u * sy[k]
            ex = px - qx
            ey = py - qy
            d = np.sqrt(ex * ex + ey * ey)
            better = d < best_d
            best_d = np.where(better, d, best_d)
            best_s = np.where(better, seg_s0[k] + along, best_s)
        take = (best_d <= lane_tol[lane]) & (best_d < out_d)
        out_lane[take] = lane
        out_s[take] = best_s[take]
        out_d[take] = best_d[take]
    return out_lane, out_s, out_d


def lead_search(group_offsets, lane, s, length, speed, eligible):
    n = lane.shape[0]
    lead = np.full(n, -1, dtype=np.int64)
    gap = np.full(n, np.nan)
    ahead_max = np.full(n, np.nan)
    for g in range(group_offsets.shape[0] - 1):
        a, b = group_offsets[g], group_offsets[g + 1]
        if b - a < 2:
            continue
        ln = lane[a:b]
        ss = s[a:b]
        ok = eligible[a:b] & (ln >= 0)
        same = (ln[:, None] == ln[None, :]) & ok[:, None] & ok[None, :]
        ds = ss[None, :] - ss[:, None]
        ahead = same & (ds > 0)
        has = ahead.any(axis=1)
        if not has.any():
            continue
        masked = np.where(ahead, ds, np.inf)
        j = np.argmin(masked, axis=1)
        rows = np.nonzero(has)[0]
        lead[a + rows] = a + j[rows]
        d = masked[rows, j[rows]] - 0.5 * length[a + rows] - 0.5 * length[a + j[rows]]
        gap[a + rows] = np.maximum(d, 0.0)
        v = speed[a:b]
        vmat = np.where(ahead, v[None, :], -np.inf)
        amax = vmat.max(axis=1)
        has_nan = (ahead & np.isnan(v)[None, :]).any(axis=1)
        amax = np.where(has_nan, np.nan, amax)
        ahead_max[a + rows] = amax[rows]
    return lead, gap, ahead_max


def pairwise_distances(x, y):
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    return np.sqrt(dx * dx + dy * dy)


def nearest_neighbor(group_offsets, x, y):
    n = x.shape[0]
    out = np.full(n, np.inf)
    for g in range(group_offsets.shape[0] - 1):
        a, b = group_offsets[g], group_offsets[g + 1]
        if b - a < 2:
            continue
        m = pairwise_distances(x[a:b], y[a:b])
        np.fill_diagonal(m, np.inf)
        out[a:b] = m.min(axis=1)
    return out


def rule_predicates(speed, lead_speed, gap, has_lead, ahead_max,
                    v_min, d_thresh, ttc_thresh, unit_factor, rule4_geq):
    n = speed.shape[0]
    rules = np.zeros((n, 6), dtype=np.bool_)
    closing = speed - lead_speed
    with np.errstate(divide="ignore", invalid="ignore"):
        ttc = np.where(has_lead & (closing > 0), gap / closing, np.inf)
    dv = closing * unit_factor
    rules[:, 0] = speed >= v_min
    rules[:, 1] = has_lead & (speed > lead_speed)
    rules[:, 2] = has_lead & (speed >= ahead_max)
    if rule4_geq:
        rules[:, 3] = has_lead & (gap >= d_thresh)
    else:
        rules[:, 3] = has_lead & (gap <= d_thresh)
    rules[:, 4] = has_lead & (gap < (dv / 30.0) ** 2)
    rules[:, 5] = has_lead & (ttc <= ttc_thresh)
    return rules, ttc
