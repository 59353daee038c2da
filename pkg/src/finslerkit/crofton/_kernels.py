"""Line/triangle-mesh intersection counting: numba kernels and numpy fallbacks.

Each kernel returns, per line, the number of triangles crossed transversally
by the full line (both parameter signs), or -1 when some hit lands within
``eps`` barycentric distance of a triangle edge.
"""
from __future__ import annotations

import numpy as np

from .._accel import USE_NUMBA, njit, prange
from .mesh import BVH

BARY_EPS = 1e-9
_STACK = 128


# ---------------------------------------------------------------- numba ----

@njit(cache=False, inline="always")
def _line_box(o0, o1, o2, d0, d1, d2, lo, hi):
    tmin = -np.inf
    tmax = np.inf
    for ax in range(3):
        o = o0 if ax == 0 else (o1 if ax == 1 else o2)
        d = d0 if ax == 0 else (d1 if ax == 1 else d2)
        if abs(d) < 1e-300:
            if o < lo[ax] or o > hi[ax]:
                return False
        else:
            t1 = (lo[ax] - o) / d
            t2 = (hi[ax] - o) / d
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
            if tmin > tmax:
                return False
    return True


@njit(cache=False, inline="always")
def _line_tri(o0, o1, o2, d0, d1, d2, v, a, b, eps):
    # Moller-Trumbore without the t >= 0 restriction
    p0 = d1 * b[2] - d2 * b[1]
    p1 = d2 * b[0] - d0 * b[2]
    p2 = d0 * b[1] - d1 * b[0]
    det = a[0] * p0 + a[1] * p1 + a[2] * p2
    if det == 0.0:
        return 0
    inv = 1.0 / det
    t0 = o0 - v[0]
    t1 = o1 - v[1]
    t2 = o2 - v[2]
    u = (t0 * p0 + t1 * p1 + t2 * p2) * inv
    q0 = t1 * a[2] - t2 * a[1]
    q1 = t2 * a[0] - t0 * a[2]
    q2 = t0 * a[1] - t1 * a[0]
    w = (d0 * q0 + d1 * q1 + d2 * q2) * inv
    m = min(u, w, 1.0 - u - w)
    if m > eps:
        return 1
    if m >= -eps:
        return -1
    return 0


@njit(parallel=True, cache=False)
def _count_bvh_numba(origins, dirs, lo, hi, left, right, start, count, v0, e1, e2, eps):
    n = origins.shape[0]
    out = np.zeros(n, np.int64)
    for i in prange(n):
        o0, o1, o2 = origins[i, 0], origins[i, 1], origins[i, 2]
        d0, d1, d2 = dirs[i, 0], dirs[i, 1], dirs[i, 2]
        stack = np.empty(_STACK, np.int64)
        stack[0] = 0
        sp = 1
        c = 0
        degenerate = False
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if not _line_box(o0, o1, o2, d0, d1, d2, lo[node], hi[node]):
                continue
            if left[node] < 0:
                for k in range(start[node], start[node] + count[node]):
                    r = _line_tri(o0, o1, o2, d0, d1, d2, v0[k], e1[k], e2[k], eps)
                    if r == 1:
                        c += 1
                    elif r == -1:
                        degenerate = True
            else:
                stack[sp] = right[node]
                stack[sp + 1] = left[node]
                sp += 2
        out[i] = -1 if degenerate else c
    return out


@njit(parallel=True, cache=False)
def _count_brute_numba(origins, dirs, v0, e1, e2, eps):
    n = origins.shape[0]
    out = np.zeros(n, np.int64)
    for i in prange(n):
        c = 0
        degenerate = False
        for k in range(v0.shape[0]):
            r = _line_tri(origins[i, 0], origins[i, 1], origins[i, 2],
                          dirs[i, 0], dirs[i, 1], dirs[i, 2], v0[k], e1[k], e2[k], eps)
            if r == 1:
                c += 1
            elif r == -1:
                degenerate = True
        out[i] = -1 if degenerate else c
    return out


# ---------------------------------------------------------------- numpy ----

def _line_tri_numpy(o, d, v0, e1, e2, eps):
    """Vectorised line/triangle classification over matching rows: 1 hit, -1 degenerate, 0 miss."""
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    ok = det != 0.0
    inv = np.divide(1.0, det, out=np.zeros_like(det), where=ok)
    t = o - v0
    u = np.einsum("ij,ij->i", t, p) * inv
    q = np.cross(t, e1)
    w = np.einsum("ij,ij->i", d, q) * inv
    m = np.minimum(np.minimum(u, w), 1.0 - u - w)
    res = np.where(m > eps, 1, np.where(m >= -eps, -1, 0))
    return np.where(ok, res, 0)


def _line_box_numpy(o, d, lo, hi):
    with np.errstate(divide="ignore", invalid="ignore"):
        zero = np.abs(d) < 1e-300
        t1 = (lo - o) / np.where(zero, 1.0, d)
        t2 = (hi - o) / np.where(zero, 1.0, d)
    tlo = np.where(zero, -np.inf, np.minimum(t1, t2))
    thi = np.where(zero, np.inf, np.maximum(t1, t2))
    outside = zero & ((o < lo) | (o > hi))
    return (tlo.max(axis=1) <= thi.min(axis=1)) & ~outside.any(axis=1)


def _tally(n, line_idx, res):
    counts = np.zeros(n, np.int64)
    np.add.at(counts, line_idx, (res == 1).astype(np.int64))
    degenerate = np.zeros(n, bool)
    degenerate[line_idx[res == -1]] = True
    counts[degenerate] = -1
    return counts


def _count_brute_numpy(origins, dirs, v0, e1, e2, eps, chunk=1 << 20):
    n, T = origins.shape[0], v0.shape[0]
    out = np.zeros(n, np.int64)
    if T == 0:
        return out
    lines_per = max(1, chunk // T)
    for a in range(0, n, lines_per):
        b = min(n, a + lines_per)
        li = np.repeat(np.arange(a, b), T)
        ti = np.tile(np.arange(T), b - a)
        res = _line_tri_numpy(origins[li], dirs[li], v0[ti], e1[ti], e2[ti], eps)
        out[a:b] = _tally(b - a, li - a, res)
    return out


def _count_bvh_numpy(origins, dirs, bvh: BVH, eps, chunk=1 << 15):
    """Wavefront traversal: all (line, node) pairs of a chunk advance one level per pass."""
    n = origins.shape[0]
    out = np.zeros(n, np.int64)
    for a in range(0, n, chunk):
        b = min(n, a + chunk)
        o, d = origins[a:b], dirs[a:b]
        lines = np.arange(b - a)
        nodes = np.zeros(b - a, np.int64)
        hit_lines, hit_res = [], []
        while lines.size:
            keep = _line_box_numpy(o[lines], d[lines], bvh.lo[nodes], bvh.hi[nodes])
            lines, nodes = lines[keep], nodes[keep]
            leaf = bvh.left[nodes] < 0
            ll, ln = lines[leaf], nodes[leaf]
            if ll.size:
                cnt = bvh.count[ln]
                rep_l = np.repeat(ll, cnt)
                offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
                tri = np.repeat(bvh.start[ln], cnt) + offs
                hit_res.append(_line_tri_numpy(o[rep_l], d[rep_l], bvh.v0[tri], bvh.e1[tri], bvh.e2[tri], eps))
                hit_lines.append(rep_l)
            inner = ~leaf
            lines = np.concatenate([lines[inner], lines[inner]])
            nodes = np.concatenate([bvh.left[nodes[inner]], bvh.right[nodes[inner]]])
        if hit_lines:
            out[a:b] = _tally(b - a, np.concatenate(hit_lines), np.concatenate(hit_res))
    return out


# -------------------------------------------------------------- dispatch ----

def count_hits_bvh(origins, dirs, bvh: BVH, eps: float = BARY_EPS, use_numba: bool | None = None) -> np.ndarray:
    origins = np.ascontiguousarray(origins, float)
    dirs = np.ascontiguousarray(dirs, float)
    if bvh.v0.shape[0] == 0:
        return np.zeros(origins.shape[0], np.int64)
    if USE_NUMBA if use_numba is None else use_numba:
        return _count_bvh_numba(origins, dirs, bvh.lo, bvh.hi, bvh.left, bvh.right,
                                bvh.start, bvh.count, bvh.v0, bvh.e1, bvh.e2, eps)
    return _count_bvh_numpy(origins, dirs, bvh, eps)


def count_hits_brute(origins, dirs, v0, e1, e2, eps: float = BARY_EPS, use_numba: bool | None = None) -> np.ndarray:
    origins = np.ascontiguousarray(origins, float)
    dirs = np.ascontiguousarray(dirs, float)
    if USE_NUMBA if use_numba is None else use_numba:
        return _count_brute_numba(origins, dirs, np.ascontiguousarray(v0, float),
                                  np.ascontiguousarray(e1, float), np.ascontiguousarray(e2, float), eps)
    return _count_brute_numpy(origins, dirs, v0, e1, e2, eps)
