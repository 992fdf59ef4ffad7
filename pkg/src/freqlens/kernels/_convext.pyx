# cython: boundscheck=False, wraparound=False, cdivision=True
"""BLAS-backed 1D convolution kernels (same padding, stride 1).

Same contracts as ``freqlens.kernels.conv_numpy``; the k-offset and batch
loops run in C and call dgemm directly on strided views, avoiding the
window/column temporaries of the numpy path.
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

BACKEND = "compiled"

cdef char TRANS_N = 78  # 'N'
cdef char TRANS_T = 84  # 'T'


cdef inline void _gemm(char ta, char tb, int m, int n, int k,
                       double* a, int lda, double* b, int ldb,
                       double beta, double* c, int ldc) noexcept nogil:
    cdef double alpha = 1.0
    dgemm(&ta, &tb, &m, &n, &k, &alpha, a, &lda, b, &ldb, &beta, c, &ldc)


def conv1d_forward(x, w, b):
    """Cross-correlate ``x`` with ``w`` and add the per-channel bias."""
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    w_arr = np.ascontiguousarray(w, dtype=np.float64)
    b_arr = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[:, :, ::1] xv = x_arr
    cdef double[:, :, ::1] wv = w_arr
    cdef double[::1] bv = b_arr

    cdef Py_ssize_t n = xv.shape[0], c_in = xv.shape[1], h = xv.shape[2]
    cdef Py_ssize_t c_out = wv.shape[1], k = wv.shape[2]
    cdef Py_ssize_t left = (k - 1) // 2
    cdef Py_ssize_t hp = h + k - 1

    xp_arr = np.zeros((n, c_in, hp), dtype=np.float64)
    xp_arr[:, :, left:left + h] = x_arr
    cdef double[:, :, ::1] xp = xp_arr

    # wt[kk, co, ci] = w[ci, co, kk]
    wt_arr = np.ascontiguousarray(np.transpose(w_arr, (2, 1, 0)))
    cdef double[:, :, ::1] wt = wt_arr

    out_arr = np.empty((n, c_out, h), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr

    cdef Py_ssize_t i, kk, co, t
    with nogil:
        for i in range(n):
            for co in range(c_out):
                for t in range(h):
                    out[i, co, t] = bv[co]
            for kk in range(k):
                # out_i^T (H x C_out) += xp_i[:, kk:kk+H]^T (H x C_in) @ wt_kk^T
                _gemm(TRANS_N, TRANS_N, <int>h, <int>c_out, <int>c_in,
                      &xp[i, 0, kk], <int>hp, &wt[kk, 0, 0], <int>c_in,
                      1.0, &out[i, 0, 0], <int>h)
    return out_arr


def conv1d_backward(x, w, gy):
    """Gradients of ``conv1d_forward`` w.r.t. input, weights, and bias."""
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    w_arr = np.ascontiguousarray(w, dtype=np.float64)
    gy_arr = np.ascontiguousarray(gy, dtype=np.float64)
    cdef double[:, :, ::1] xv = x_arr
    cdef double[:, :, ::1] wv = w_arr
    cdef double[:, :, ::1] gyv = gy_arr

    cdef Py_ssize_t n = xv.shape[0], c_in = xv.shape[1], h = xv.shape[2]
    cdef Py_ssize_t c_out = wv.shape[1], k = wv.shape[2]
    cdef Py_ssize_t left = (k - 1) // 2
    cdef Py_ssize_t hp = h + k - 1

    xp_arr = np.zeros((n, c_in, hp), dtype=np.float64)
    xp_arr[:, :, left:left + h] = x_arr
    cdef double[:, :, ::1] xp = xp_arr

    # w2[kk, ci, co] = w[ci, co, kk]
    w2_arr = np.ascontiguousarray(np.transpose(w_arr, (2, 0, 1)))
    cdef double[:, :, ::1] w2 = w2_arr

    gxp_arr = np.zeros((n, c_in, hp), dtype=np.float64)
    cdef double[:, :, ::1] gxp = gxp_arr
    gw2_arr = np.zeros((k, c_in, c_out), dtype=np.float64)
    cdef double[:, :, ::1] gw2 = gw2_arr

    cdef Py_ssize_t i, kk
    with nogil:
        for i in range(n):
            for kk in range(k):
                # gxp_i[:, kk:kk+H]^T (H x C_in) += gy_i^T (H x C_out) @ w2_kk^T
                _gemm(TRANS_N, TRANS_N, <int>h, <int>c_in, <int>c_out,
                      &gyv[i, 0, 0], <int>h, &w2[kk, 0, 0], <int>c_out,
                      1.0, &gxp[i, 0, kk], <int>hp)
                # gw2_kk^T (C_out x C_in) += gy_i (C_out x H) @ xp_i slice (H x C_in)
                _gemm(TRANS_T, TRANS_N, <int>c_out, <int>c_in, <int>h,
                      &gyv[i, 0, 0], <int>h, &xp[i, 0, kk], <int>hp,
                      1.0, &gw2[kk, 0, 0], <int>c_out)

    gx = np.ascontiguousarray(gxp_arr[:, :, left:left + h])
    gw = np.ascontiguousarray(np.transpose(gw2_arr, (1, 2, 0)))
    gb = gy_arr.sum(axis=(0, 2))
    return gx, gw, gb
