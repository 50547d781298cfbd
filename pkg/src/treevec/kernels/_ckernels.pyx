# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled gather/scatter kernels.

These are the hot non-BLAS reductions of the level-synchronous batch
evaluator: scatter-add of child states / embedding gradients, and the
segmented row maximum used for pooling. Contracts match _pykernels.
"""

import numpy as np

cimport numpy as cnp

BACKEND_NAME = "compiled"

ctypedef fused real:
    float
    double


def index_add_rows(real[:, ::1] out, const cnp.int64_t[::1] idx, real[:, ::1] values):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    cdef Py_ssize_t i, j, r
    if idx.shape[0] != n:
        raise ValueError("idx length must match values rows")
    with nogil:
        for i in range(n):
            r = idx[i]
            for j in range(d):
                out[r, j] += values[i, j]
    return np.asarray(out)


def segment_max_rows(real[:, ::1] values, const cnp.int64_t[::1] seg_ids, Py_ssize_t groups):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    if seg_ids.shape[0] != n:
        raise ValueError("seg_ids length must match values rows")
    out_arr = np.zeros((groups, d), dtype=np.asarray(values).dtype)
    arg_arr = np.full((groups, d), -1, dtype=np.int64)
    cdef real[:, ::1] out = out_arr
    cdef cnp.int64_t[:, ::1] arg = arg_arr
    cdef Py_ssize_t i, j, g
    cdef real v
    with nogil:
        for i in range(n):
            g = seg_ids[i]
            for j in range(d):
                v = values[i, j]
                if arg[g, j] < 0 or v > out[g, j]:
                    out[g, j] = v
                    arg[g, j] = i
    return out_arr, arg_arr
