# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels.

Semantics match hclab._backend's NumPy fallbacks: same traversal order,
same random streams (all randomness is drawn by the caller).  Results
agree with the fallbacks to float rounding (a few ulp: libm scalar
transcendentals here vs numpy's SIMD ones, strict left-to-right segment
sums here vs numpy's blocked reduction); each backend is individually
deterministic.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, log1p

cnp.import_array()


def f_values(xi, double rho):
    cdef double[::1] x = np.ascontiguousarray(xi, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double logrho = log(rho)
    cdef double v, e
    cdef Py_ssize_t i
    for i in range(n):
        v = x[i]
        if v < 0.0:
            e = exp(v)
            out[i] = log1p(rho * e) - log1p(e)
        else:
            e = exp(-v)
            out[i] = logrho + log1p(e / rho) - log1p(e)
    return out_arr


def segment_sum(values, counts):
    cdef double[::1] vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef long long[::1] cnt = np.ascontiguousarray(counts, dtype=np.int64)
    cdef Py_ssize_t m = cnt.shape[0]
    out_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, pos = 0
    cdef double acc
    for i in range(m):
        acc = 0.0
        for j in range(cnt[i]):
            acc += vals[pos]
            pos += 1
        out[i] = acc
    return out_arr


def gather_segment_sum(values, idx, counts):
    cdef double[::1] vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef long long[::1] ind = np.ascontiguousarray(idx, dtype=np.int64)
    cdef long long[::1] cnt = np.ascontiguousarray(counts, dtype=np.int64)
    cdef Py_ssize_t m = cnt.shape[0]
    out_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, pos = 0
    cdef double acc
    for i in range(m):
        acc = 0.0
        for j in range(cnt[i]):
            acc += vals[ind[pos]]
            pos += 1
        out[i] = acc
    return out_arr


def bp_field_sums(msg, head, Py_ssize_t n, double rho):
    cdef double[::1] m = np.ascontiguousarray(msg, dtype=np.float64)
    cdef long long[::1] hd = np.ascontiguousarray(head, dtype=np.int64)
    cdef Py_ssize_t nd = m.shape[0]
    sums_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] sums = sums_arr
    cdef double logrho = log(rho)
    cdef double v, e, f
    cdef Py_ssize_t d
    for d in range(nd):
        v = m[d]
        if v < 0.0:
            e = exp(v)
            f = log1p(rho * e) - log1p(e)
        else:
            e = exp(-v)
            f = logrho + log1p(e / rho) - log1p(e)
        sums[hd[d]] += f
    return sums_arr


def bp_pass(msg, tail, head, Py_ssize_t n, double rho, double h):
    cdef double[::1] m = np.ascontiguousarray(msg, dtype=np.float64)
    cdef long long[::1] tl = np.ascontiguousarray(tail, dtype=np.int64)
    cdef long long[::1] hd = np.ascontiguousarray(head, dtype=np.int64)
    cdef Py_ssize_t nd = m.shape[0]
    fm_arr = np.empty(nd, dtype=np.float64)
    cdef double[::1] fm = fm_arr
    sums_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] sums = sums_arr
    out_arr = np.empty(nd, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double logrho = log(rho)
    cdef double v, e, f
    cdef Py_ssize_t d
    for d in range(nd):
        v = m[d]
        if v < 0.0:
            e = exp(v)
            f = log1p(rho * e) - log1p(e)
        else:
            e = exp(-v)
            f = logrho + log1p(e / rho) - log1p(e)
        fm[d] = f
        sums[hd[d]] += f
    for d in range(nd):
        out[d] = h + sums[tl[d]] - fm[d ^ 1]
    return out_arr
