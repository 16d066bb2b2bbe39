"""Minimal neural network stack: layers, compact CNN model, Adam training."""

from .model import (
    ModelWeights,
    derive_arch_tag,
    forward,
    init_weights,
    loss_and_grads,
    param_count,
)
from .train import AdamState, TrainConfig, adam_step, learning_rate, train

__all__ = [
    "AdamState",
    "ModelWeights",
    "TrainConfig",
    "adam_step",
    "derive_arch_tag",
    "forward",
    "init_weights",
    "learning_rate",
    "loss_and_grads",
    "param_count",
    "train",
]
