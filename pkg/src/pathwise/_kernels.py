"""Compiled inner loops.

Everything here is algorithmic plumbing behind the public modules: the
level-crossing sweep that builds Lebesgue partitions, the streaming
position-difference supremum used by the field distance, and the exact
p-variation dynamic program.  Pure-python mirrors of the tricky ones live in
the test suite as oracles.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "lebesgue_sweep",
    "idiff_sup",
    "pvar_dp_pow",
    "collapse_extrema",
    "profile_scan",
    "apply_bumps",
    "holder_stream",
    "holder_pairs",
]


@njit(cache=True)
def lebesgue_sweep(times, values, spacing, t_max, k0, on_grid0):
    """Stopping times of the interpolant on the value grid {k*spacing}.

    Walks the sample segments once, emitting (hit_time, grid_index) whenever
    the path touches a grid value different from the one it currently sits on.
    Crossing times are the exact linear solutions anchored at the segment's
    sample endpoints, so repeated single-hit queries reproduce them bitwise.
    """
    cap = 1024
    out_t = np.empty(cap, np.float64)
    out_k = np.empty(cap, np.int64)
    n = 0
    w_idx = k0
    on = on_grid0
    for i in range(times.size - 1):
        ta = times[i]
        if ta > t_max:
            break
        tb = times[i + 1]
        va = values[i]
        vb = values[i + 1]
        if va == vb:
            continue
        d = 1 if vb > va else -1
        if on:
            k = w_idx + d
        else:
            # before the first hit the path lives strictly inside one cell
            k = int(np.floor(va / spacing)) + (1 if d > 0 else 0)
        g = k * spacing
        while (vb - g) * d >= 0.0:
            t_hit = ta + (g - va) / (vb - va) * (tb - ta)
            if t_hit > t_max:
                return out_t[:n], out_k[:n]
            if n == cap:
                cap *= 2
                grow_t = np.empty(cap, np.float64)
                grow_k = np.empty(cap, np.int64)
                grow_t[:n] = out_t
                grow_k[:n] = out_k
                out_t = grow_t
                out_k = grow_k
            out_t[n] = t_hit
            out_k[n] = k
            n += 1
            w_idx = k
            on = True
            k += d
            g = k * spacing
    return out_t[:n], out_k[:n]


@njit(cache=True)
def idiff_sup(v, on_grid, kidx, ratio, h, i_lo, i_hi, threshold):
    """Supremum over the fine grid of |fine minus coarse integral processes|.

    ``v`` is the full fine partition value sequence (entry 0 is the start
    value, the last entry may be an off-grid truncation value).  The coarse
    partition is reconstructed on the fly: its stopping times are exactly the
    fine entries whose grid index is divisible by ``ratio`` and whose value
    differs from the current coarse anchor.  Each step adds
    (1{fine < u} - 1{coarse < u}) * increment on the u-indices strictly
    between the two positions, and the running maximum of |difference| over
    all (step, u) pairs is the answer.

    Returns early with the current maximum once it exceeds ``threshold``
    (pass +inf to disable).
    """
    width = i_hi - i_lo + 1
    d = np.zeros(width, np.float64)
    c = v[0]
    m = 0.0
    for j in range(v.size - 1):
        a = v[j]
        delta = v[j + 1] - a
        if a != c and delta != 0.0:
            if a < c:
                lo_v = a
                hi_v = c
                s = delta
            else:
                lo_v = c
                hi_v = a
                s = -delta
            i_start = int(np.floor(lo_v / h)) + 1
            i_end = int(np.floor(hi_v / h))
            if i_start < i_lo:
                i_start = i_lo
            if i_end > i_hi:
                i_end = i_hi
            for i in range(i_start, i_end + 1):
                idx = i - i_lo
                d[idx] += s
                ad = abs(d[idx])
                if ad > m:
                    m = ad
            if m >= threshold:
                return m
        nxt = j + 1
        if on_grid[nxt] and kidx[nxt] % ratio == 0 and v[nxt] != c:
            c = v[nxt]
    return m


@njit(cache=True)
def pvar_dp_pow(x, p):
    """Exact p-variation of a value sequence, returned as sum |inc|^p at the optimum."""
    n = x.size
    if n < 2:
        return 0.0
    best = np.empty(n, np.float64)
    best[0] = 0.0
    for j in range(1, n):
        bj = 0.0
        xj = x[j]
        for i in range(j):
            c = best[i] + abs(xj - x[i]) ** p
            if c > bj:
                bj = c
        best[j] = bj
    return best[n - 1]


@njit(cache=True)
def collapse_extrema(x, buf):
    """Copy the alternating local extrema of x into buf; returns their count.

    Dropping interior points of monotone runs does not change the exact
    p-variation, which is what makes the per-row dynamic program affordable.
    """
    n = x.size
    buf[0] = x[0]
    m = 1
    last = x[0]
    trend = 0
    for i in range(1, n):
        xi = x[i]
        if xi == last:
            continue
        t = 1 if xi > last else -1
        if t == trend:
            buf[m - 1] = xi
        else:
            buf[m] = xi
            m += 1
            trend = t
        last = xi
    return m


@njit(cache=True)
def apply_bumps(bumps, seq, leg_from, leg_to, h):
    for j in range(leg_from, leg_to):
        b = bumps[j]
        if b >= 0:
            seq[b] += h


@njit(cache=True)
def profile_scan(bumps, seq, leg_from, leg_to, h, p, buf, best_pow):
    """Apply legs one by one and run the p-variation DP after each row."""
    bp = best_pow
    for j in range(leg_from, leg_to):
        b = bumps[j]
        if b >= 0:
            seq[b] += h
        m = collapse_extrema(seq, buf)
        v = pvar_dp_pow(buf[:m], p)
        if v > bp:
            bp = v
    return bp


@njit(cache=True)
def holder_stream(bumps, g, powtab, h):
    """Running max of |g[i]-g[j]| / (|i-j|*h)^alpha while g accumulates bumps.

    After a bump only pairs involving the bumped index can set a new maximum,
    so each row costs O(grid) instead of O(grid^2).
    """
    best = 0.0
    for j in range(bumps.size):
        b = bumps[j]
        if b < 0:
            continue
        g[b] += h
        gb = g[b]
        for i in range(g.size):
            if i == b:
                continue
            diff = gb - g[i]
            if diff < 0.0:
                diff = -diff
            dd = b - i if b > i else i - b
            q = diff / powtab[dd]
            if q > best:
                best = q
    return best


@njit(cache=True)
def holder_pairs(g, powtab):
    best = 0.0
    for i in range(g.size):
        gi = g[i]
        for j in range(i + 1, g.size):
            diff = g[j] - gi
            if diff < 0.0:
                diff = -diff
            q = diff / powtab[j - i]
            if q > best:
                best = q
    return best
