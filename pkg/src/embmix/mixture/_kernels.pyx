# cython: boundscheck=False, wraparound=False, cdivision=True
"""BLAS-backed responsibility kernel shared by the Bayesian and ML mixtures."""

from libc.math cimport exp, log

import numpy as np

from scipy.linalg.cython_blas cimport dtrsm

DEF CHUNK_ROWS = 256


def cluster_logresp(double[:, ::1] X, double[:, ::1] means,
                    double[:, :, ::1] chols, double[::1] logw,
                    double[::1] qcoef, double[:, ::1] resp_out):
    """Write row-softmax responsibilities, return the summed row log-sum-exp.

    Same contract as the NumPy fallback: score is
    logw[k] - qcoef[k] * ||L_k^{-1}(x - means[k])||^2 with chols holding one
    lower Cholesky factor per component or a single shared factor, and the
    softmax denominator summed in ascending order so component order does
    not change the result.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t n_comp = means.shape[0]
    cdef bint shared = chols.shape[0] == 1
    cdef Py_ssize_t chunk = CHUNK_ROWS if n > CHUNK_ROWS else n

    buf_arr = np.empty((max(chunk, 1), d), dtype=np.float64)
    logp_arr = np.empty((max(chunk, 1), n_comp), dtype=np.float64)
    sort_arr = np.empty(n_comp, dtype=np.float64)
    cdef double[:, ::1] buf = buf_arr
    cdef double[:, ::1] logp = logp_arr
    cdef double[::1] srt = sort_arr

    cdef Py_ssize_t start = 0, rows, i, j, k, c
    cdef double q, top, denom, v
    cdef double total = 0.0
    cdef double one = 1.0
    cdef int rows_i, d_i
    # C-order (rows, d) buffer read as Fortran is the transposed (d, rows)
    # matrix, and a C-order lower factor read as Fortran is upper: asking
    # BLAS for op(A)=A^T with uplo='U' therefore solves L z = x - m per row.
    cdef char side = b'L', uplo = b'U', transa = b'T', diag = b'N'

    while start < n:
        rows = chunk if start + chunk <= n else n - start
        rows_i = <int> rows
        d_i = <int> d
        for k in range(n_comp):
            c = 0 if shared else k
            for i in range(rows):
                for j in range(d):
                    buf[i, j] = X[start + i, j] - means[k, j]
            dtrsm(&side, &uplo, &transa, &diag, &d_i, &rows_i, &one,
                  &chols[c, 0, 0], &d_i, &buf[0, 0], &d_i)
            for i in range(rows):
                q = 0.0
                for j in range(d):
                    v = buf[i, j]
                    q += v * v
                logp[i, k] = logw[k] - qcoef[k] * q
        for i in range(rows):
            top = logp[i, 0]
            for k in range(1, n_comp):
                if logp[i, k] > top:
                    top = logp[i, k]
            for k in range(n_comp):
                v = exp(logp[i, k] - top)
                srt[k] = v
                resp_out[start + i, k] = v
            for k in range(1, n_comp):
                v = srt[k]
                j = k - 1
                while j >= 0 and srt[j] > v:
                    srt[j + 1] = srt[j]
                    j -= 1
                srt[j + 1] = v
            denom = 0.0
            for k in range(n_comp):
                denom += srt[k]
            for k in range(n_comp):
                resp_out[start + i, k] /= denom
            total += log(denom) + top
        start += chunk
    return total
