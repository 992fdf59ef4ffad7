"""Layers with explicit forward/backward passes.

Everything runs in float64 on numpy arrays. Each layer caches what its
backward pass needs, accumulates parameter gradients in place, and exposes
``param_items()`` as ``(name, value, gradient)`` triples for the optimizer.
Batch norm keeps running statistics for evaluation mode; ``update_running``
can be disabled so diagnostic forward passes leave training state untouched.
"""

from __future__ import annotations

import math

import numpy as np

from .. import kernels


def xavier_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class Conv1d:
    """Stride-1, same-padding 1D convolution. Weights are (C_in, C_out, k)."""

    def __init__(self, name: str, in_channels: int, out_channels: int,
                 kernel_length: int, rng: np.random.Generator):
        self.name = name
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_length = kernel_length
        self.w = xavier_uniform(
            rng, (in_channels, out_channels, kernel_length),
            fan_in=in_channels * kernel_length, fan_out=out_channels * kernel_length,
        )
        self.b = np.zeros(out_channels)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._x = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.in_channels:
            raise ValueError(
                f"{self.name}: expected {self.in_channels} input channels, got {x.shape[1]}"
            )
        self._x = x
        return kernels.conv1d_forward(x, self.w, self.b)

    def backward(self, gy: np.ndarray) -> np.ndarray:
        gx, gw, gb = kernels.conv1d_backward(self._x, self.w, gy)
        self.gw += gw
        self.gb += gb
        return gx

    def param_items(self):
        yield f"{self.name}.w", self.w, self.gw
        yield f"{self.name}.b", self.b, self.gb

    def state_items(self):
        return ()


class BatchNorm1d:
    """Per-channel batch normalization over (batch, time)."""

    def __init__(self, name: str, channels: int, momentum: float = 0.9, eps: float = 1e-5):
        self.name = name
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.gamma = np.ones(channels)
        self.beta = np.zeros(channels)
        self.ggamma = np.zeros_like(self.gamma)
        self.gbeta = np.zeros_like(self.beta)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self._xhat = None
        self._inv_std = None

    def forward(self, x: np.ndarray, training: bool, update_running: bool = True) -> np.ndarray:
        if training:
            m = x.shape[0] * x.shape[2]
            mean = x.mean(axis=(0, 2))
            xm = x - mean[None, :, None]
            var = np.einsum("nch,nch->c", xm, xm) / m
            if update_running:
                mom = self.momentum
                self.running_mean = mom * self.running_mean + (1.0 - mom) * mean
                self.running_var = mom * self.running_var + (1.0 - mom) * var
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = xm
            xhat *= inv_std[None, :, None]
            self._xhat = xhat
            self._inv_std = inv_std
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean[None, :, None]) * inv_std[None, :, None]
        return self.gamma[None, :, None] * xhat + self.beta[None, :, None]

    def backward(self, gy: np.ndarray) -> np.ndarray:
        xhat, inv_std = self._xhat, self._inv_std
        m = gy.shape[0] * gy.shape[2]
        sum_gy = gy.sum(axis=(0, 2))
        sum_gy_xhat = np.einsum("nch,nch->c", gy, xhat)
        self.ggamma += sum_gy_xhat
        self.gbeta += sum_gy
        out = m * gy
        out -= sum_gy[None, :, None]
        out -= xhat * sum_gy_xhat[None, :, None]
        out *= (self.gamma * inv_std / m)[None, :, None]
        return out

    def param_items(self):
        yield f"{self.name}.gamma", self.gamma, self.ggamma
        yield f"{self.name}.beta", self.beta, self.gbeta

    def state_items(self):
        yield f"{self.name}.running_mean", self.running_mean
        yield f"{self.name}.running_var", self.running_var


class ReLU:
    def __init__(self):
        self._y = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        y = np.maximum(x, 0.0)
        self._y = y
        return y

    def backward(self, gy: np.ndarray) -> np.ndarray:
        return np.where(self._y > 0, gy, 0.0)


class GlobalAvgPool:
    """(N, C, H) -> (N, C) temporal mean."""

    def __init__(self):
        self._h = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._h = x.shape[2]
        return x.mean(axis=2)

    def backward(self, gy: np.ndarray) -> np.ndarray:
        return np.repeat(gy[:, :, None], self._h, axis=2) / self._h


class Linear:
    def __init__(self, name: str, in_features: int, out_features: int, rng: np.random.Generator):
        self.name = name
        self.in_features = in_features
        self.out_features = out_features
        self.w = xavier_uniform(rng, (in_features, out_features), in_features, out_features)
        self.b = np.zeros(out_features)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._x = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.w + self.b

    def backward(self, gy: np.ndarray) -> np.ndarray:
        self.gw += self._x.T @ gy
        self.gb += gy.sum(axis=0)
        return gy @ self.w.T

    def param_items(self):
        yield f"{self.name}.w", self.w, self.gw
        yield f"{self.name}.b", self.b, self.gb

    def state_items(self):
        return ()
