# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled CSR kernels. Signatures mirror :mod:`smartkl._fallback`."""

import numpy as np

cimport numpy as cnp
from libc.math cimport log, log1p

cnp.import_array()


def csr_matvec(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
               const double[::1] data, const double[::1] x):
    cdef Py_ssize_t m = indptr.shape[0] - 1
    cdef Py_ssize_t i, p
    cdef double acc
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] y = out
    for i in range(m):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        y[i] = acc
    return out


def csr_rmatvec(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                const double[::1] data, const double[::1] u, Py_ssize_t n):
    cdef Py_ssize_t m = indptr.shape[0] - 1
    cdef Py_ssize_t i, p
    cdef double ui
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] y = out
    for i in range(m):
        ui = u[i]
        if ui == 0.0:
            continue
        for p in range(indptr[i], indptr[i + 1]):
            y[indices[p]] += data[p] * ui
    return out


def kl_sum(const double[::1] y, const double[::1] yp):
    """Sum of y*log(y/yp) - y + yp with 0 log 0 = 0; inputs pre-validated.

    Each term is yp*((1+d)*log1p(d) - d) with d = (y-yp)/yp, which keeps
    relative accuracy when y is close to yp; far below yp the direct
    form avoids log1p(-1).
    """
    cdef Py_ssize_t i, n = y.shape[0]
    cdef double acc = 0.0, d
    for i in range(n):
        if y[i] > 0.0:
            d = (y[i] - yp[i]) / yp[i]
            if d > -0.5:
                acc += yp[i] * ((1.0 + d) * log1p(d) - d)
            else:
                acc += y[i] * log(y[i] / yp[i]) - y[i] + yp[i]
        else:
            acc += yp[i]
    return acc
