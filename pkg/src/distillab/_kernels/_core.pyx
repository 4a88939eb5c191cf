# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pair-counting kernels (O(N * C^2) inner loops)."""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def kendall_signed_many(a, b):
    """Row-wise signed Kendall tau between two (N, C) arrays."""
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0], c = av.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t r, i, j
    cdef double da, db, s, sa, sb
    for r in range(n):
        s = 0.0
        for i in range(c - 1):
            for j in range(i + 1, c):
                da = av[r, i] - av[r, j]
                db = bv[r, i] - bv[r, j]
                sa = 0.0 if da == 0.0 else (1.0 if da > 0.0 else -1.0)
                sb = 0.0 if db == 0.0 else (1.0 if db > 0.0 else -1.0)
                s += sa * sb
        out[r] = 2.0 * s / (c * (c - 1))
    return out


def kendall_paper_many(a, b):
    """Row-wise pair statistic with the 1/0 step in place of the sign."""
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0], c = av.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t r, i, j
    cdef double s
    for r in range(n):
        s = 0.0
        for i in range(c - 1):
            for j in range(i + 1, c):
                if av[r, i] > av[r, j] and bv[r, i] > bv[r, j]:
                    s += 1.0
        out[r] = 2.0 * s / (c * (c - 1))
    return out
