"""Independent reference implementations the tests check against.

These deliberately avoid the library's computation paths: the DFT oracle is
a direct summation against an explicit exponential matrix (never np.fft),
the convolution oracle is nested Python loops, and the variance oracle is a
two-pass fsum. Keep them dumb.
"""

from __future__ import annotations

import math

import numpy as np


def naive_dft_amplitudes(signal) -> np.ndarray:
    """O(T^2) direct-summation one-sided amplitude spectrum, |DFT|/T."""
    s = np.asarray(signal, dtype=np.float64)
    t_len = s.shape[0]
    bins = (t_len - 1) // 2 + 1
    k = np.arange(bins)[:, None]
    t = np.arange(t_len)[None, :]
    kernel = np.exp(-2j * np.pi * k * t / t_len)
    return np.abs(kernel @ s) / t_len


def two_pass_variance(values) -> float:
    """Population variance via fsum, two passes."""
    vals = [float(v) for v in values]
    mean = math.fsum(vals) / len(vals)
    return math.fsum((v - mean) ** 2 for v in vals) / len(vals)


def weighted_mean_bin(amplitudes) -> float:
    """Direct-summation amplitude-weighted mean bin index."""
    num = math.fsum(k * float(z) for k, z in enumerate(amplitudes))
    den = math.fsum(float(z) for z in amplitudes)
    return num / den


def direct_conv1d(x, w, b) -> np.ndarray:
    """Nested-loop same-padding cross-correlation, O(N*C^2*H*k)."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, c_in, h = x.shape
    _, c_out, k = w.shape
    left = (k - 1) // 2
    out = np.zeros((n, c_out, h))
    for i in range(n):
        for co in range(c_out):
            for t in range(h):
                acc = b[co]
                for ci in range(c_in):
                    for kk in range(k):
                        src = t + kk - left
                        if 0 <= src < h:
                            acc += x[i, ci, src] * w[ci, co, kk]
                out[i, co, t] = acc
    return out


def network_loss(net, x, y) -> float:
    """Training-mode cross-entropy with running stats frozen (for FD checks)."""
    from freqlens.net.training import softmax_cross_entropy

    logits = net.forward(x, training=True, update_running=False)
    loss, _ = softmax_cross_entropy(logits, y)
    return loss


def finite_difference_gradients(net, x, y, step: float = 1e-5) -> dict[str, np.ndarray]:
    """Central finite differences of the training-mode loss for every parameter."""
    grads = {}
    for name, value, _ in net.param_items():
        grad = np.zeros_like(value)
        flat = value.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.shape[0]):
            original = flat[idx]
            flat[idx] = original + step
            plus = network_loss(net, x, y)
            flat[idx] = original - step
            minus = network_loss(net, x, y)
            flat[idx] = original
            gflat[idx] = (plus - minus) / (2.0 * step)
        grads[name] = grad
    return grads
