"""Compiled inner loops: keyed direction hashing and bulk particle settlement.

Everything here mirrors the plain-Python definitions in stacks.py bit for bit;
the test suite asserts the two routes agree.  Grids are dense occupancy and
stack-consumption arrays over a bounding box that grows on demand, with a
2-cell guard margin so a walk inside the aggregate can always index its
neighbors.
"""

import numpy as np
from numba import njit, uint64, int64

TAG_WALK = np.uint64(0xA0761D6478BD642F)
TAG_COUNT = np.uint64(0xE7037ED1A0B428DB)
TAG_CLOCK = np.uint64(0x8EBC6AF09C88C6E3)
TAG_SEQ = np.uint64(0x589965CC75374CC3)

#: Sentinel for "no predecessor" in settlement records.
NO_SITE = np.int64(2**62)

_GUARD = 2


@njit(uint64(uint64), cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))


@njit(uint64(uint64, uint64, int64, int64, int64), cache=True, inline="always")
def keyed_bits(seed, tag, a, b, c):
    h = mix64(seed ^ tag)
    h = mix64(h ^ uint64(a))
    h = mix64(h ^ uint64(b))
    h = mix64(h ^ uint64(c))
    return h


@njit(int64(uint64, int64, int64, int64), cache=True, inline="always")
def dir_code(seed, x, y, k):
    return int64(keyed_bits(seed, TAG_WALK, x, y, k) >> uint64(62))


@njit(cache=True)
def uniform_from_bits(h):
    # 53-bit mantissa, offset to stay inside the open interval (0, 1)
    return (np.float64(h >> uint64(11)) + 0.5) * (2.0**-53)


@njit(cache=True)
def count_uniform(seed, level):
    return uniform_from_bits(keyed_bits(seed, TAG_COUNT, level, 0, 0))


@njit(cache=True)
def clock_uniform(seed, level, j):
    return uniform_from_bits(keyed_bits(seed, TAG_CLOCK, level, j, 0))


@njit(cache=True)
def direction_counts(seed, xs, ys, ks):
    """Histogram of direction codes over probe triples, for uniformity tests."""
    out = np.zeros(4, dtype=np.int64)
    for i in range(xs.shape[0]):
        out[dir_code(seed, xs[i], ys[i], ks[i])] += 1
    return out


@njit(cache=True)
def _expanded(occ, cnt, ox, oy, need_x, need_y):
    half_w = (occ.shape[0] - 2 * _GUARD) // 2
    half_h = (occ.shape[1] - 2 * _GUARD) // 2
    new_w = max(half_w + (half_w >> 1) + 4, abs(need_x) + 8)
    new_h = max(half_h + (half_h >> 1) + 4, abs(need_y) + 8)
    W = 2 * new_w + 2 * _GUARD
    H = 2 * new_h + 2 * _GUARD
    occ2 = np.zeros((W, H), dtype=np.uint8)
    cnt2 = np.zeros((W, H), dtype=np.int32)
    ox2 = new_w + _GUARD
    oy2 = new_h + _GUARD
    dx = ox2 - ox
    dy = oy2 - oy
    occ2[dx : dx + occ.shape[0], dy : dy + occ.shape[1]] = occ
    cnt2[dx : dx + cnt.shape[0], dy : dy + cnt.shape[1]] = cnt
    return occ2, cnt2, ox2, oy2


@njit(cache=True)
def grow_levels(
    seed,
    levels,
    base_x,
    base_y,
    sequential,
    strip_half,
    budget,
    half_w0,
    half_h0,
):
    """Settle one particle per entry of `levels`, in order, from (0, level).

    Returns per-particle settlement records:
      sx, sy          settled site
      px, py          last aggregate site visited before settling
                      (NO_SITE when the particle settled at its start)
      plen            number of steps walked
      flags           1 if the walk (start and settled site included) touched
                      the strip |y| <= strip_half; strip_half < 0 disables
      status          0 ok, 1 step budget exceeded on particle `fail_at`
    """
    W = 2 * half_w0 + 2 * _GUARD
    H = 2 * half_h0 + 2 * _GUARD
    occ = np.zeros((W, H), dtype=np.uint8)
    cnt = np.zeros((W, H), dtype=np.int32)
    ox = half_w0 + _GUARD
    oy = half_h0 + _GUARD

    for b in range(base_x.shape[0]):
        bx = base_x[b]
        by = base_y[b]
        gx = bx + ox
        gy = by + oy
        if (
            gx < 2 * _GUARD
            or gx >= occ.shape[0] - 2 * _GUARD
            or gy < 2 * _GUARD
            or gy >= occ.shape[1] - 2 * _GUARD
        ):
            occ, cnt, ox, oy = _expanded(occ, cnt, ox, oy, bx, by)
            gx = bx + ox
            gy = by + oy
        occ[gx, gy] = 1

    m = levels.shape[0]
    sx = np.empty(m, dtype=np.int64)
    sy = np.empty(m, dtype=np.int64)
    px = np.empty(m, dtype=np.int64)
    py = np.empty(m, dtype=np.int64)
    plen = np.zeros(m, dtype=np.int64)
    flags = np.zeros(m, dtype=np.uint8)
    seq_k = int64(0)

    for j in range(m):
        x = int64(0)
        y = levels[j]
        lx = NO_SITE
        ly = NO_SITE
        steps = int64(0)
        if strip_half >= 0 and abs(y) <= strip_half:
            flags[j] = 1
        gx = x + ox
        gy = y + oy
        inside = (
            gx >= _GUARD
            and gx < occ.shape[0] - _GUARD
            and gy >= _GUARD
            and gy < occ.shape[1] - _GUARD
        )
        if inside:
            while occ[gx, gy] == 1:
                if sequential:
                    d = dir_code(seed ^ TAG_SEQ, seq_k, 0, 0)
                    seq_k += 1
                else:
                    k = cnt[gx, gy]
                    cnt[gx, gy] = k + 1
                    d = dir_code(seed, x, y, int64(k))
                lx = x
                ly = y
                if d == 0:
                    x += 1
                    gx += 1
                elif d == 1:
                    x -= 1
                    gx -= 1
                elif d == 2:
                    y += 1
                    gy += 1
                else:
                    y -= 1
                    gy -= 1
                steps += 1
                if strip_half >= 0 and abs(y) <= strip_half:
                    flags[j] = 1
                if steps > budget:
                    return sx, sy, px, py, plen, flags, 1, j, seq_k
        # settle at (x, y); keep the guard margin around every occupied cell
        if (
            gx < 2 * _GUARD
            or gx >= occ.shape[0] - 2 * _GUARD
            or gy < 2 * _GUARD
            or gy >= occ.shape[1] - 2 * _GUARD
        ):
            occ, cnt, ox, oy = _expanded(occ, cnt, ox, oy, x, y)
            gx = x + ox
            gy = y + oy
        occ[gx, gy] = 1
        sx[j] = x
        sy[j] = y
        px[j] = lx
        py[j] = ly
        plen[j] = steps
    return sx, sy, px, py, plen, flags, 0, -1, seq_k


@njit(cache=True)
def sample_exits(seed, agg_x, agg_y, start_x, start_y, n_samples, budget):
    """Repeated settlement draws from a fixed occupied set.

    Consumption counters persist across draws, so the draws are independent:
    each walk reads stack entries no earlier walk has touched.
    """
    half_w = int64(1)
    half_h = int64(1)
    for i in range(agg_x.shape[0]):
        half_w = max(half_w, abs(agg_x[i]))
        half_h = max(half_h, abs(agg_y[i]))
    half_w += 2
    half_h += 2
    W = 2 * half_w + 2 * _GUARD
    H = 2 * half_h + 2 * _GUARD
    occ = np.zeros((W, H), dtype=np.uint8)
    cnt = np.zeros((W, H), dtype=np.int32)
    ox = half_w + _GUARD
    oy = half_h + _GUARD
    for i in range(agg_x.shape[0]):
        occ[agg_x[i] + ox, agg_y[i] + oy] = 1
    out_x = np.empty(n_samples, dtype=np.int64)
    out_y = np.empty(n_samples, dtype=np.int64)
    for s in range(n_samples):
        x = start_x
        y = start_y
        gx = x + ox
        gy = y + oy
        steps = int64(0)
        while occ[gx, gy] == 1:
            k = cnt[gx, gy]
            cnt[gx, gy] = k + 1
            d = dir_code(seed, x, y, int64(k))
            if d == 0:
                x += 1
                gx += 1
            elif d == 1:
                x -= 1
                gx -= 1
            elif d == 2:
                y += 1
                gy += 1
            else:
                y -= 1
                gy -= 1
            steps += 1
            if steps > budget:
                return out_x, out_y, 1, s
        out_x[s] = x
        out_y[s] = y
    return out_x, out_y, 0, -1
