"""Minimal deterministic 1D-CNN engine: layers, specs, training, checkpoints."""

from .checkpoint import load_checkpoint, save_checkpoint
from .network import (
    AdapterSpec,
    ConvUnitSpec,
    GatePlan,
    Network,
    NetworkSpec,
    count_params_flops,
    fcn_spec,
    resnet_spec,
)
from .training import (
    Adam,
    TrainConfig,
    TrainingDivergedError,
    TrainResult,
    epoch_permutation,
    evaluate,
    softmax_cross_entropy,
    train_network,
)

__all__ = [
    "Adam",
    "AdapterSpec",
    "ConvUnitSpec",
    "GatePlan",
    "Network",
    "NetworkSpec",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "count_params_flops",
    "epoch_permutation",
    "evaluate",
    "fcn_spec",
    "load_checkpoint",
    "resnet_spec",
    "save_checkpoint",
    "softmax_cross_entropy",
    "train_network",
]
