# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sparse row-sum kernel.

Accumulation per output element runs left to right over the stored indices;
deterministic run to run.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def adj_rowsum(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
               const double[:, ::1] v, out=None):
    """Row sums over stored neighbors: ``out[i] = sum(v[j] for j in N(i))``."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t ncols = v.shape[1]
    if out is None:
        out = np.zeros((n, ncols), dtype=np.float64)
    else:
        out[:] = 0.0
    cdef double[:, ::1] acc = out
    cdef Py_ssize_t i, jj, j, c
    for i in range(n):
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            for c in range(ncols):
                acc[i, c] += v[j, c]
    return out
