# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled radial recurrences; same contract as ``_sweep_py``."""

import numpy as np
cimport numpy as cnp


def sweep_inner(const double[:, ::1] ratio, const double complex[:, :, ::1] local):
    cdef Py_ssize_t S = local.shape[0], K = local.shape[1], B = local.shape[2]
    out_arr = np.empty((S + 1, K, B), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef Py_ssize_t s, k, b
    cdef double q
    with nogil:
        for k in range(K):
            for b in range(B):
                out[0, k, b] = 0.0
        for s in range(S):
            for k in range(K):
                q = ratio[s, k]
                for b in range(B):
                    out[s + 1, k, b] = q * out[s, k, b] + local[s, k, b]
    return out_arr


def sweep_outer(const double[:, ::1] ratio, const double complex[:, :, ::1] local):
    cdef Py_ssize_t S = local.shape[0], K = local.shape[1], B = local.shape[2]
    out_arr = np.empty((S + 1, K, B), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef Py_ssize_t s, k, b
    cdef double q
    with nogil:
        for k in range(K):
            for b in range(B):
                out[S, k, b] = 0.0
        for s in range(S - 1, -1, -1):
            for k in range(K):
                q = ratio[s, k]
                for b in range(B):
                    out[s, k, b] = q * out[s + 1, k, b] + local[s, k, b]
    return out_arr
