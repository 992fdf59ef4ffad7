"""1D Grad-CAM attribution over the last preserved conv unit.

The importance weight of each channel is the temporal mean of the gradient
of the pre-softmax class score with respect to that channel's post-ReLU
activation; the attribution is the ReLU of the weighted channel sum. Under
a gate plan the "last conv unit" is the last preserved one (trailing skipped
units pass gradients through unchanged).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .net.network import Network

__all__ = ["GradCamResult", "grad_cam", "write_attribution_csv"]


@dataclass(frozen=True)
class GradCamResult:
    """Temporal attribution for one instance and one class.

    ``activation[t]`` is the (nonnegative) contribution of time step ``t``
    to the class score; ``score`` is the pre-softmax logit of the class.
    """

    activation: np.ndarray
    class_index: int
    score: float

    def __post_init__(self):
        object.__setattr__(self, "activation", np.asarray(self.activation, dtype=np.float64))


def grad_cam(net: Network, instance: np.ndarray, class_index: int) -> GradCamResult:
    """Grad-CAM attribution of ``class_index`` over one (channels, length) instance."""
    u = np.asarray(instance, dtype=np.float64)
    if u.ndim == 1:
        u = u[None, :]
    if u.ndim != 2:
        raise ValueError(f"expected a (channels, length) instance, got shape {u.shape}")
    if not 0 <= class_index < net.spec.classes:
        raise ValueError(f"class index {class_index} out of range for {net.spec.classes} classes")

    x = u[None, :, :]
    length = u.shape[1]
    logits = net.forward(x, training=False)
    score = float(logits[0, class_index])

    dlogits = np.zeros_like(logits)
    dlogits[0, class_index] = 1.0
    net.zero_grads()
    grad = net.head_input_gradient(dlogits)  # (1, C, H), gradient at the head input
    net.zero_grads()
    activations = np.maximum(net.head_input, 0.0)

    weights = grad.mean(axis=2)  # (1, C)
    combined = (weights[:, :, None] * activations).sum(axis=1)[0]  # (H,)
    cam = np.maximum(combined, 0.0)
    if cam.shape[0] != length:
        positions = np.linspace(0.0, cam.shape[0] - 1.0, num=length)
        cam = np.interp(positions, np.arange(cam.shape[0]), cam)
    return GradCamResult(activation=cam, class_index=class_index, score=score)


def write_attribution_csv(result: GradCamResult, path) -> None:
    """Write the attribution as ``t,activation`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "activation"])
        for t, value in enumerate(result.activation):
            writer.writerow([t, repr(float(value))])
