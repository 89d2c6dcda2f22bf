# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled kernels for the hot loops: windowed weighted sums over a
location-scale grid, the Gaussian max-statistic reduction, and the pairwise
corrected statistics. Each function mirrors its twin in _core_py exactly;
the backend dispatcher picks this module when the build succeeded.
"""

from libc.math cimport INFINITY, fabs, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "cython"

cdef double INV_SQRT2 = 1.0 / sqrt(2.0)


def aggregate(values, packed):
    """Row-wise kernel sums: (n, T) values -> (n, G) window dot products."""
    cdef const double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const cnp.int64_t[::1] starts = packed.starts
    cdef const cnp.int64_t[::1] offsets = packed.offsets
    cdef const double[::1] w = packed.weights
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t G = starts.shape[0]
    out_arr = np.empty((n, G), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, g, k, lo, off, m
    cdef double acc
    with nogil:
        for i in range(n):
            for g in range(G):
                lo = starts[g]
                off = offsets[g]
                m = offsets[g + 1] - off
                acc = 0.0
                for k in range(m):
                    acc += v[i, lo + k] * w[off + k]
                out[i, g] = acc
    return out_arr


def draw_max_stat(zc, packed):
    """Max over grid points of (range of per-series sums) / sqrt(2) - lambda.

    The range max_i s - min_i s equals the max over ordered pairs of
    |s_i - s_j| exactly, so the pair loop is never materialized.
    """
    cdef const double[:, ::1] v = np.ascontiguousarray(zc, dtype=np.float64)
    cdef const cnp.int64_t[::1] starts = packed.starts
    cdef const cnp.int64_t[::1] offsets = packed.offsets
    cdef const double[::1] w = packed.weights
    cdef const double[::1] lam = packed.lam
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t G = starts.shape[0]
    cdef Py_ssize_t i, g, k, lo, off, m
    cdef double acc, hi_s, lo_s, val
    cdef double best = -INFINITY
    with nogil:
        for g in range(G):
            lo = starts[g]
            off = offsets[g]
            m = offsets[g + 1] - off
            hi_s = -INFINITY
            lo_s = INFINITY
            for i in range(n):
                acc = 0.0
                for k in range(m):
                    acc += v[i, lo + k] * w[off + k]
                if acc > hi_s:
                    hi_s = acc
                if acc < lo_s:
                    lo_s = acc
            val = (hi_s - lo_s) * INV_SQRT2 - lam[g]
            if val > best:
                best = val
    return best


def pair_corrected(agg, denom, lam, pairs):
    """Corrected pair statistics |agg_i - agg_j| / denom_ij - lambda, (m, G)."""
    cdef const double[:, ::1] a = np.ascontiguousarray(agg, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(denom, dtype=np.float64)
    cdef const double[::1] l = np.ascontiguousarray(lam, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] p = np.ascontiguousarray(pairs, dtype=np.int64)
    cdef Py_ssize_t m = p.shape[0]
    cdef Py_ssize_t G = a.shape[1]
    out_arr = np.empty((m, G), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t t, g, i, j
    with nogil:
        for t in range(m):
            i = p[t, 0]
            j = p[t, 1]
            for g in range(G):
                out[t, g] = fabs(a[i, g] - a[j, g]) / d[t] - l[g]
    return out_arr
