"""Numba-compiled implementations of the hot kernels.

Signatures and results match ``_numpy``; loops replace the broadcasting.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _stencil(i, a, b, half_window):
    width = min(2 * half_window, b - 1 - a)
    lo = min(max(i - half_window, a), b - 1 - width)
    return lo, lo + width


@njit(cache=True)
def speed_heading(x, y, t, offsets, half_window):
    n = x.shape[0]
    speed = np.empty(n)
    dx = np.empty(n)
    dy = np.empty(n)
    for g in range(offsets.shape[0] - 1):
        a = offsets[g]
        b = offsets[g + 1]
        for i in range(a, b):
            lo, hi = _stencil(i, a, b, half_window)
            ex = x[hi] - x[lo]
            ey = y[hi] - y[lo]
            dx[i] = ex
            dy[i] = ey
            if hi == lo:
                speed[i] = np.nan
            else:
                speed[i] = math.sqrt(ex * ex + ey * ey) / (t[hi] - t[lo])
    return speed, dx, dy


@njit(cache=True)
def acceleration(speed, t, offsets, half_window, window):
    n = speed.shape[0]
    raw = np.empty(n)
    acc = np.empty(n)
    half = window // 2
    for g in range(offsets.shape[0] - 1):
        a = offsets[g]
        b = offsets[g + 1]
        for i in range(a, b):
            lo, hi = _stencil(i, a, b, half_window)
            if hi == lo:
                raw[i] = np.nan
            else:
                raw[i] = (speed[hi] - speed[lo]) / (t[hi] - t[lo])
        for i in range(a, b):
            if b - a < 3:
                acc[i] = np.nan
                continue
            total = 0.0
            for j in range(-half, half + 1):
                k = min(max(i + j, a), b - 1)
                total += raw[k]
            acc[i] = total / (2 * half + 1)
    return acc


@njit(cache=True)
def fill_heading(dx, dy, speed, yaw, offsets, min_speed):
    n = dx.shape[0]
    out = np.empty(n)
    for g in range(offsets.shape[0] - 1):
        a = offsets[g]
        b = offsets[g + 1]
        have = False
        last = 0.0
        for i in range(a, b):
            if speed[i] >= min_speed:
                last = math.atan2(dy[i], dx[i])
                have = True
            out[i] = last if have else yaw[i]
    return out


@njit(cache=True)
def _angle_between_deg(h1, h0):
    d = abs(h1 - h0) % TWO_PI
    return math.degrees(min(d, TWO_PI - d))


@njit(cache=True)
def heading_deviation(heading, offsets, window):
    n = heading.shape[0]
    out = np.empty(n)
    for g in range(offsets.shape[0] - 1):
        a = offsets[g]
        b = offsets[g + 1]
        for i in range(a, b):
            if i - window >= a:
                out[i] = _angle_between_deg(heading[i], heading[i - window])
            else:
                out[i] = np.nan
    return out


@njit(cache=True)
def sustained(cond, t, offsets, duration):
    n = cond.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for g in range(offsets.shape[0] - 1):
        a = offsets[g]
        b = offsets[g + 1]
        start = -1
        for i in range(a, b):
            if cond[i]:
                if start < 0:
                    start = i
                out[i] = t[i] - t[start] >= duration - 1e-9
            else:
                start = -1
    return out


@njit(cache=True)
def assign_lanes(px, py, seg_x0, seg_y0, seg_x1, seg_y1, seg_lane, seg_s0,
                 lane_tol, lane_order):
    n = px.shape[0]
    m = seg_x0.shape[0]
    out_lane = np.full(n, -1, dtype=np.int64)
    out_s = np.full(n, np.nan)
    out_d = np.full(n, np.inf)
    sx = seg_x1 - seg_x0
    sy = seg_y1 - seg_y0
    seg_len2 = sx * sx + sy * sy
    seg_len = np.sqrt(seg_len2)
    for p in range(n):
        for lane in lane_order:
            best_d = np.inf
            best_s = np.nan
            for k in range(m):
                if seg_lane[k] != lane:
                    continue
                dot = (px[p] - seg_x0[k]) * sx[k] + (py[p] - seg_y0[k]) * sy[k]
                u = min(max(dot / seg_len2[k], 0.0), 1.0)
                # one rounding for the arc length keeps gaps exact on grid inputs
                along = min(max(dot / seg_len[k], 0.0), seg_len[k])
                qx = seg_x0[k] + u * sx[k]
                qy = seg_y0[k] + u * sy[k]
                ex = px[p] - qx
                ey = py[p] - qy
                d = math.sqrt(ex * ex + ey * ey)
                if d < best_d:
                    best_d = d
                    best_s = seg_s0[k] + along
            if best_d <= lane_tol[lane] and best_d < out_d[p]:
                out_lane[p] = lane
                out_s[p] = best_s
                out_d[p] = best_d
    return out_lane, out_s, out_d


@njit(cache=True)
def lead_search(group_offsets, lane, s, length, speed, eligible):
    n = lane.shape[0]
    lead = np.full(n, -1, dtype=np.int64)
    gap = np.full(n, np.nan)
    ahead_max = np.full(n, np.nan)
    for g in range(group_offsets.shape[0] - 1):
        a = group_offsets[g]
        b = group_offsets[g + 1]
        for i in range(a, b):
            if not eligible[i] or lane[i] < 0:
                continue
            best = -1
            best_ds = np.inf
            amax = -np.inf
            saw_nan = False
            for j in range(a, b):
                if j == i or not eligible[j] or lane[j] != lane[i]:
                    continue
                ds = s[j] - s[i]
                if ds > 0:
                    if ds < best_ds:
                        best_ds = ds
                        best = j
                    if math.isnan(speed[j]):
                        saw_nan = True
                    elif speed[j] > amax:
                        amax = speed[j]
            if best >= 0:
                lead[i] = best
                d = best_ds - 0.5 * length[i] - 0.5 * length[best]
                gap[i] = max(d, 0.0)
                ahead_max[i] = np.nan if saw_nan else amax
    return lead, gap, ahead_max


@njit(cache=True)
def pairwise_distances(x, y):
    n = x.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ex = x[i] - x[j]
            ey = y[i] - y[j]
            out[i, j] = math.sqrt(ex * ex + ey * ey)
    return out


@njit(cache=True)
def nearest_neighbor(group_offsets, x, y):
    n = x.shape[0]
    out = np.full(n, np.inf)
    for g in range(group_offsets.shape[0] - 1):
        a = group_offsets[g]
        b = group_offsets[g + 1]
        for i in range(a, b):
            for j in range(a, b):
                if i == j:
                    continue
                ex = x[i] - x[j]
                ey = y[i] - y[j]
                d = math.sqrt(ex * ex + ey * ey)
                if d < out[i]:
                    out[i] = d
    return out


@njit(cache=True)
def rule_predicates(speed, lead_speed, gap, has_lead, ahead_max,
                    v_min, d_thresh, ttc_thresh, unit_factor, rule4_geq):
    n = speed.shape[0]
    rules = np.zeros((n, 6), dtype=np.bool_)
    ttc = np.full(n, np.inf)
    for i in range(n):
        v = speed[i]
        rules[i, 0] = v >= v_min
        if not has_lead[i]:
            continue
        closing = v - lead_speed[i]
        if closing > 0:
            ttc[i] = gap[i] / closing
        dv = closing * unit_factor
        rules[i, 1] = v > lead_speed[i]
        rules[i, 2] = v >= ahead_max[i]
        if rule4_geq:
            rules[i, 3] = gap[i] >= d_thresh
        else:
            rules[i, 3] = gap[i] <= d_thresh
        rules[i, 4] = gap[i] < (dv / 30.0) * (dv / 30.0)
        rules[i, 5] = ttc[i] <= ttc_thresh
    return rules, ttc
