# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Must stay bit-compatible with ``_kernels_py``.

Inner products are accumulated coordinate by coordinate in index order and the
module is built with ``-ffp-contract=off`` so no FMA contraction changes the
rounding relative to the numpy fallback.
"""
import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


def fps_select(const double[:, ::1] pool, Py_ssize_t start, double cos_stop,
               Py_ssize_t max_points):
    cdef Py_ssize_t m = pool.shape[0]
    cdef Py_ssize_t dim = pool.shape[1]
    cdef double[::1] best = np.empty(m, dtype=np.float64)
    cdef int64_t[::1] chosen = np.empty(max_points, dtype=np.int64)
    cdef Py_ssize_t n = 0, j, c, far
    cdef double acc, lowest

    far = start
    while True:
        chosen[n] = far
        n += 1
        lowest = 2.0
        for j in range(m):
            acc = pool[j, 0] * pool[far, 0]
            for c in range(1, dim):
                acc = acc + pool[j, c] * pool[far, c]
            if n == 1 or acc > best[j]:
                best[j] = acc
        far = 0
        for j in range(m):
            if best[j] < lowest:
                lowest = best[j]
                far = j
        if lowest > cos_stop or n >= max_points:
            break
    return np.asarray(chosen[:n]).copy(), lowest


def nearest_vertex(const double[:, ::1] points, const double[:, ::1] verts):
    cdef Py_ssize_t m = points.shape[0]
    cdef Py_ssize_t nv = verts.shape[0]
    cdef Py_ssize_t dim = points.shape[1]
    cdef int64_t[::1] idx = np.empty(m, dtype=np.int64)
    cdef double[::1] best = np.empty(m, dtype=np.float64)
    cdef Py_ssize_t j, i, c, arg
    cdef double acc, top

    for j in range(m):
        arg = 0
        top = -2.0
        for i in range(nv):
            acc = points[j, 0] * verts[i, 0]
            for c in range(1, dim):
                acc = acc + points[j, c] * verts[i, c]
            if acc > top:
                top = acc
                arg = i
        idx[j] = arg
        best[j] = top
    return np.asarray(idx), np.asarray(best)


cdef inline Py_ssize_t _bisect_right(const double* row, double u, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if u < row[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def walk_indices(const double[:, ::1] cum, const int64_t[::1] last_nz,
                 const double[::1] start_cum, int64_t start_last,
                 const double[:, ::1] u):
    cdef Py_ssize_t trials = u.shape[0]
    cdef Py_ssize_t steps = u.shape[1]
    cdef Py_ssize_t n = cum.shape[1]
    cdef int64_t[:, ::1] out = np.empty((trials, steps), dtype=np.int64)
    cdef Py_ssize_t t, k, v

    with nogil:
        for t in range(trials):
            v = _bisect_right(&start_cum[0], u[t, 0], n)
            if v > start_last:
                v = start_last
            out[t, 0] = v
            for k in range(1, steps):
                v = _bisect_right(&cum[v, 0], u[t, k], n)
                if v > last_nz[out[t, k - 1]]:
                    v = last_nz[out[t, k - 1]]
                out[t, k] = v
    return np.asarray(out)
