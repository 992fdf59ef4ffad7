"""Deterministic training loop: Adam, cross-entropy, seeded batch order.

Batch order for epoch ``e`` is drawn from a seed sequence keyed by
``(seed, e)``, so training can be resumed from any epoch boundary and
reproduce exactly the batches a full run would have seen.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .network import Network


class TrainingDivergedError(RuntimeError):
    """Raised when a batch produces a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1500
    batch_size: int = 16
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 1e-6 <= self.learning_rate <= 1e-3:
            raise ValueError("learning_rate must lie in [1e-6, 1e-3]")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


class Adam:
    """Adam with standard bias correction; one shared step counter."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, net: Network, lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for name, value, grad in net.param_items():
            m = self.m.get(name)
            if m is None:
                m = self.m[name] = np.zeros_like(value)
            v = self.v.get(name)
            if v is None:
                v = self.v[name] = np.zeros_like(value)
            m *= b1
            m += (1.0 - b1) * grad
            v *= b2
            v += (1.0 - b2) * grad * grad
            value -= lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)

    def state_dict(self) -> dict:
        return {
            "t": self.t,
            "m": {k: v.copy() for k, v in self.m.items()},
            "v": {k: v.copy() for k, v in self.v.items()},
        }

    def load_state_dict(self, state: dict) -> None:
        self.t = int(state["t"])
        self.m = {k: np.array(v, dtype=np.float64) for k, v in state["m"].items()}
        self.v = {k: np.array(v, dtype=np.float64) for k, v in state["v"].items()}


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of softmax(logits) and its gradient w.r.t. logits."""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(total)
    loss = float(-log_probs[np.arange(n), labels].mean())
    dlogits = exp / total
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    return loss, dlogits


def epoch_permutation(seed: int, epoch: int, n: int) -> np.ndarray:
    """Instance order for one epoch, addressable without replaying history."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1, epoch]))
    return rng.permutation(n)


@dataclass
class TrainResult:
    epochs_run: list[int]
    losses: list[float]
    final_batch: Optional[tuple[np.ndarray, np.ndarray]] = None
    captured: Optional[list[np.ndarray]] = None
    seconds: float = 0.0
    history: dict = field(default_factory=dict)


def train_network(
    net: Network,
    x: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    optimizer: Optional[Adam] = None,
    first_epoch: int = 1,
    last_epoch: Optional[int] = None,
    capture_final_batch: bool = False,
) -> tuple[TrainResult, Adam]:
    """Train ``net`` in place over epochs ``first_epoch..last_epoch``.

    With ``capture_final_batch=True``, after the last epoch's updates a
    capture forward pass (training-mode statistics, running stats frozen)
    is run on that epoch's final batch and returned with the result.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]
    optimizer = optimizer if optimizer is not None else Adam()
    last_epoch = cfg.epochs if last_epoch is None else last_epoch
    result = TrainResult(epochs_run=[], losses=[])

    started = time.perf_counter()
    for epoch in range(first_epoch, last_epoch + 1):
        order = epoch_permutation(cfg.seed, epoch, n)
        epoch_loss = 0.0
        batches = 0
        last_idx = None
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = x[idx], y[idx]
            logits = net.forward(xb, training=True)
            loss, dlogits = softmax_cross_entropy(logits, yb)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss} at epoch {epoch}, batch {batches + 1}"
                )
            net.zero_grads()
            net.backward(dlogits)
            optimizer.step(net, cfg.learning_rate)
            epoch_loss += loss
            batches += 1
            last_idx = idx
        result.epochs_run.append(epoch)
        result.losses.append(epoch_loss / batches)
        if capture_final_batch and epoch == last_epoch:
            xb, yb = x[last_idx], y[last_idx]
            _, caps = net.forward(xb, training=True, capture=True, update_running=False)
            result.final_batch = (xb, yb)
            result.captured = caps
    result.seconds = time.perf_counter() - started
    return result, optimizer


def evaluate(net: Network, x: np.ndarray, y: np.ndarray, batch_size: int = 256) -> float:
    """Classification accuracy in evaluation mode."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    correct = 0
    for start in range(0, x.shape[0], batch_size):
        logits = net.forward(x[start:start + batch_size], training=False)
        correct += int((logits.argmax(axis=1) == y[start:start + batch_size]).sum())
    return correct / x.shape[0]
