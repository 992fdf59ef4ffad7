"""Pure-numpy 1D convolution kernels (same padding, stride 1).

Shapes follow the network convention: inputs ``(N, C_in, H)``, weights
``(C_in, C_out, k)``, outputs ``(N, C_out, H)``. The sliding windows feed a
single einsum contraction per call, which numpy lowers to BLAS matmuls.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BACKEND = "numpy"


def _pad_split(k: int) -> tuple[int, int]:
    left = (k - 1) // 2
    return left, k - 1 - left


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross-correlate ``x`` with ``w`` and add the per-channel bias."""
    n, c_in, h = x.shape
    _, c_out, k = w.shape
    left, right = _pad_split(k)
    xp = np.pad(x, ((0, 0), (0, 0), (left, right)))
    windows = sliding_window_view(xp, h, axis=2)  # (N, C_in, k, H)
    y = np.einsum("nckh,cok->noh", windows, w, optimize=True)
    y += b[None, :, None]
    return y


def conv1d_backward(
    x: np.ndarray, w: np.ndarray, gy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of ``conv1d_forward`` w.r.t. input, weights, and bias."""
    n, c_in, h = x.shape
    _, c_out, k = w.shape
    left, right = _pad_split(k)

    xp = np.pad(x, ((0, 0), (0, 0), (left, right)))
    xwin = sliding_window_view(xp, h, axis=2)  # (N, C_in, k, H)
    gw = np.einsum("nckh,noh->cok", xwin, gy, optimize=True)
    gb = gy.sum(axis=(0, 2))

    # Input gradient is the correlation of gy with the flipped kernel.
    gyp = np.pad(gy, ((0, 0), (0, 0), (right, left)))
    gwin = sliding_window_view(gyp, h, axis=2)  # (N, C_out, k, H)
    gx = np.einsum("nokh,cok->nch", gwin, w[:, :, ::-1], optimize=True)
    return gx, gw, gb
