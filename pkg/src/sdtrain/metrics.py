"""
评估指标
"""

import numpy as np

from src.config.settings import settings
from src.tensorcore.data import Dataset
from src.tensorcore.losses import cross_entropy_batch
from src.tensorcore.network import Network
from src.utils.exceptions import ShapeError


def _check(net: Network, dataset: Dataset) -> None:
    dataset.require_nonempty()
    if dataset.input_dim != net.input_dim:
        raise ShapeError(f"数据集维度 {dataset.input_dim} 与网络输入维度 {net.input_dim} 不一致")


def predictions(net: Network, dataset: Dataset) -> np.ndarray:
    """分块批量 argmax"""
    chunk = max(settings.CHUNK_SIZE, 256)
    return np.concatenate([net.predict(dataset.x[s:s + chunk]) for s in range(0, len(dataset), chunk)])


def evaluate(net: Network, dataset: Dataset) -> float:
    """argmax 正确的样本比例"""
    _check(net, dataset)
    return float((predictions(net, dataset) == dataset.y).mean())


def confusion_matrix(net: Network, dataset: Dataset) -> np.ndarray:
    """(C, C) 计数矩阵，行是真实标签，列是预测"""
    _check(net, dataset)
    c = max(dataset.num_classes, net.output_dim)
    pred = predictions(net, dataset)
    return np.bincount(dataset.y * c + pred, minlength=c * c).reshape(c, c)


def per_sample_losses(net: Network, dataset: Dataset) -> np.ndarray:
    """逐样本交叉熵 (N,) float64"""
    _check(net, dataset)
    chunk = max(settings.CHUNK_SIZE, 256)
    out = []
    for s in range(0, len(dataset), chunk):
        losses, _ = cross_entropy_batch(net.forward_batch(dataset.x[s:s + chunk]), dataset.y[s:s + chunk])
        out.append(losses)
    return np.concatenate(out)


def mean_loss(net: Network, dataset: Dataset) -> float:
    return float(per_sample_losses(net, dataset).mean())
