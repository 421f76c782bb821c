"""From-scratch 1-D convolutional regression network (layers + training)."""

from . import layers
from .network import (
    AdamState,
    CnnConfig,
    CnnModel,
    ConvBlock,
    EpochStats,
    adam_step,
    backward,
    clip_gradients,
    denoise,
    forward,
    init_model,
    load_model,
    save_model,
    train,
    train_arrays,
)

__all__ = [
    "AdamState",
    "CnnConfig",
    "CnnModel",
    "ConvBlock",
    "EpochStats",
    "adam_step",
    "backward",
    "clip_gradients",
    "denoise",
    "forward",
    "init_model",
    "layers",
    "load_model",
    "save_model",
    "train",
    "train_arrays",
]
