"""
张量计算核心

层、网络、反向模式求导、损失函数、优化器与文件格式。
"""

from .data import Dataset, Sample
from .layers import Conv1D, Dense, Flatten, Layer, ReLU
from .losses import acceptable_mask, cross_entropy, softmax, spec_loss
from .network import (
    FOLLOW_ARCHITECTURE,
    Gradient,
    Network,
    backward,
    build_network,
    follow_network,
    forward,
    loss_and_grad,
    mlp,
)
from .optim import MomentumSGD, sgd_step
from .serialization import load_dataset, load_model, save_dataset, save_model

__all__ = [
    "Dataset",
    "Sample",
    "Conv1D",
    "Dense",
    "Flatten",
    "Layer",
    "ReLU",
    "acceptable_mask",
    "cross_entropy",
    "softmax",
    "spec_loss",
    "FOLLOW_ARCHITECTURE",
    "Gradient",
    "Network",
    "backward",
    "build_network",
    "follow_network",
    "forward",
    "loss_and_grad",
    "mlp",
    "MomentumSGD",
    "sgd_step",
    "load_dataset",
    "load_model",
    "save_dataset",
    "save_model",
]
