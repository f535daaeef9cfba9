# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batched point-to-segment distance and grid ray casting.

Contracts match hitl_slam.kernels.numpy_impl exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()

BACKEND = "native"

cdef long long KEY_SHIFT = 2147483648LL  # 2**31
cdef long long KEY_BASE = 4294967296LL   # 2**32


def pack_cells(ix, iy):
    return np.asarray(ix, dtype=np.int64) * KEY_BASE + (np.asarray(iy, dtype=np.int64) + KEY_SHIFT)


def unpack_cells(keys):
    keys = np.asarray(keys, dtype=np.int64)
    iy = (keys % KEY_BASE) - KEY_SHIFT
    ix = (keys - (iy + KEY_SHIFT)) // KEY_BASE
    return ix, iy


def segment_sq_dists(points, p0, p1):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef double x0 = p0[0], y0 = p0[1], x1 = p1[0], y1 = p1[1]
    cdef double dx = x1 - x0, dy = y1 - y0
    cdef double dd = dx * dx + dy * dy
    cdef Py_ssize_t n = pts.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double rx, ry, t, ex, ey
    for i in range(n):
        rx = pts[i, 0] - x0
        ry = pts[i, 1] - y0
        if dd <= 0.0:
            out[i] = rx * rx + ry * ry
            continue
        t = (rx * dx + ry * dy) / dd
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        ex = rx - t * dx
        ey = ry - t * dy
        out[i] = ex * ex + ey * ey
    return out


def cast_rays(origin, endpoints, double resolution):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ends = np.ascontiguousarray(endpoints, dtype=np.float64)
    cdef Py_ssize_t n = ends.shape[0]
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    cdef double ox = origin[0], oy = origin[1]
    cdef double inv = 1.0 / resolution
    cdef double step = resolution * 0.25
    cdef cnp.ndarray[cnp.int64_t, ndim=1] occ = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t i, k, m, total = 0
    cdef double dx, dy, length, t
    cdef long long ix, iy
    for i in range(n):
        ix = <long long>floor(ends[i, 0] * inv)
        iy = <long long>floor(ends[i, 1] * inv)
        occ[i] = ix * KEY_BASE + (iy + KEY_SHIFT)
        dx = ends[i, 0] - ox
        dy = ends[i, 1] - oy
        total += <Py_ssize_t>(sqrt(dx * dx + dy * dy) / step)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] free = np.empty(total, dtype=np.int64)
    m = 0
    for i in range(n):
        dx = ends[i, 0] - ox
        dy = ends[i, 1] - oy
        length = sqrt(dx * dx + dy * dy)
        k = <Py_ssize_t>(length / step)
        for j in range(k):
            t = j * (step / length)
            ix = <long long>floor((ox + dx * t) * inv)
            iy = <long long>floor((oy + dy * t) * inv)
            free[m] = ix * KEY_BASE + (iy + KEY_SHIFT)
            m += 1
    return np.unique(free[:m]), np.unique(occ)
