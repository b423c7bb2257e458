# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled resampling kernels.

Same operations and the same arithmetic-order contract as
``noisediag._kernels.pure``; see that module's docstring.  Any change here
must keep the two backends bit-identical.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double _U53 = 2.0 ** -53

ENUM_MAX = 24


def bootstrap_means(object values_obj, object words_obj):
    """Means of with-replacement resamples; words[r, j] picks element j of resample r."""
    cdef double[::1] values = np.ascontiguousarray(values_obj, dtype=np.float64)
    cdef cnp.uint64_t[:, ::1] words = np.ascontiguousarray(words_obj, dtype=np.uint64)
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t n_res = words.shape[0]
    if words.shape[1] != n:
        raise ValueError("words must be 2-D with one column per value")
    out_arr = np.empty(n_res, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t r, j, idx
    cdef double acc, u
    cdef double dn = <double> n
    for r in range(n_res):
        acc = 0.0
        for j in range(n):
            u = <double> (words[r, j] >> 11) * _U53
            idx = <Py_ssize_t> (u * dn)
            if idx > n - 1:
                idx = n - 1
            acc += values[idx]
        out[r] = acc / dn
    return out_arr


def signflip_means(object values_obj, object words_obj):
    """Means under random sign flips; bit j of words[r, j // 64] keeps +values[j]."""
    cdef double[::1] values = np.ascontiguousarray(values_obj, dtype=np.float64)
    cdef cnp.uint64_t[:, ::1] words = np.ascontiguousarray(words_obj, dtype=np.uint64)
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t n_res = words.shape[0]
    if words.shape[1] < (n + 63) >> 6:
        raise ValueError("words must carry at least ceil(n / 64) columns")
    out_arr = np.empty(n_res, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t r, j
    cdef double acc
    cdef double dn = <double> n
    for r in range(n_res):
        acc = 0.0
        for j in range(n):
            if (words[r, j >> 6] >> (j & 63)) & <cnp.uint64_t> 1:
                acc += values[j]
            else:
                acc += -values[j]
        out[r] = acc / dn
    return out_arr


def signflip_enum_means(object values_obj):
    """Means for all 2**n sign patterns; bit j of the pattern index keeps +values[j]."""
    cdef double[::1] values = np.ascontiguousarray(values_obj, dtype=np.float64)
    cdef Py_ssize_t n = values.shape[0]
    if n > ENUM_MAX:
        raise ValueError(f"exact enumeration limited to n <= {ENUM_MAX}, got {n}")
    if n == 0:
        raise ValueError("need at least one value")
    cdef Py_ssize_t total = (<Py_ssize_t> 1) << n
    out_arr = np.empty(total, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t m, j
    cdef double acc
    cdef double dn = <double> n
    for m in range(total):
        acc = 0.0
        for j in range(n):
            if (m >> j) & 1:
                acc += values[j]
            else:
                acc += -values[j]
        out[m] = acc / dn
    return out_arr
