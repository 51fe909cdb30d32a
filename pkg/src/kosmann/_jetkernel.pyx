# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled jet kernels: truncated products and Horner series."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef fused scalar:
    double
    double complex


cdef void _mul_rows(const scalar[:, ::1] a, const scalar[:, ::1] b, scalar[:, ::1] out,
                    const Py_ssize_t[::1] I, const Py_ssize_t[::1] J, const Py_ssize_t[::1] K) noexcept nogil:
    cdef Py_ssize_t n, p, m
    cdef Py_ssize_t N = a.shape[0]
    cdef Py_ssize_t M = a.shape[1]
    cdef Py_ssize_t P = I.shape[0]
    for n in range(N):
        for m in range(M):
            out[n, m] = 0
        for p in range(P):
            out[n, K[p]] += a[n, I[p]] * b[n, J[p]]


def mul(const scalar[:, ::1] a, const scalar[:, ::1] b, alg):
    cdef const Py_ssize_t[::1] I = alg.pair_i
    cdef const Py_ssize_t[::1] J = alg.pair_j
    cdef const Py_ssize_t[::1] K = alg.pair_k
    out_arr = np.empty((a.shape[0], a.shape[1]),
                       dtype=np.float64 if scalar is double else np.complex128)
    cdef scalar[:, ::1] out = out_arr
    with nogil:
        _mul_rows(a, b, out, I, J, K)
    return out_arr


def series(const scalar[:, ::1] coeffs, const scalar[:, ::1] delta, alg):
    cdef const Py_ssize_t[::1] I = alg.pair_i
    cdef const Py_ssize_t[::1] J = alg.pair_j
    cdef const Py_ssize_t[::1] K = alg.pair_k
    cdef Py_ssize_t N = delta.shape[0]
    cdef Py_ssize_t M = delta.shape[1]
    cdef Py_ssize_t nterms = coeffs.shape[0]
    cdef Py_ssize_t n, p, m, k
    dtype = np.float64 if scalar is double else np.complex128
    out_arr = np.zeros((N, M), dtype=dtype)
    acc_arr = np.zeros(M, dtype=dtype)
    cdef scalar[:, ::1] out = out_arr
    cdef scalar[::1] acc = acc_arr
    with nogil:
        for n in range(N):
            for m in range(M):
                out[n, m] = 0
            out[n, 0] = coeffs[nterms - 1, n]
            for k in range(nterms - 2, -1, -1):
                for m in range(M):
                    acc[m] = 0
                for p in range(I.shape[0]):
                    acc[K[p]] += out[n, I[p]] * delta[n, J[p]]
                for m in range(M):
                    out[n, m] = acc[m]
                out[n, 0] += coeffs[k, n]
    return out_arr
