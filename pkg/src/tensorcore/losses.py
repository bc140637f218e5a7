"""
损失函数

- cross_entropy: softmax 交叉熵，log-sum-exp 先减去最大 logit 保证数值稳定
- spec_loss: 面向可接受标签集合的规范损失。给定 logit 下界 l、上界 u 和可接受集合 A，
  参考类取 A 中下界最大的类，其余 A 中的类不参与，不可接受类取上界:
      spec_loss = logsumexp([l_ref] ∪ {u_j : j ∉ A}) - l_ref
  当 l == u 且 A = {y} 时与 cross_entropy 完全一致。
"""

from typing import Iterable, Tuple

import numpy as np

from src.tensorcore.tensor import ACC_DTYPE, check_finite
from src.utils.exceptions import InvalidLabelError


def _check_labels(labels: np.ndarray, num_classes: int) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise InvalidLabelError(f"类别索引越界: 有效范围 [0, {num_classes})")


def softmax(logits: np.ndarray) -> np.ndarray:
    """按最后一维做数值稳定的 softmax（float64）"""
    z = np.asarray(logits, dtype=ACC_DTYPE)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_batch(logits: np.ndarray, labels: Iterable[int]) -> Tuple[np.ndarray, np.ndarray]:
    """
    批量交叉熵

    Args:
        logits: (N, C)
        labels: 长度 N 的类别索引

    Returns:
        (每个样本的损失 (N,) float64, 对 logits 的梯度 (N, C) float64)
    """
    z = np.asarray(logits, dtype=ACC_DTYPE)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    check_finite(z, "logits")
    _check_labels(y, z.shape[1])
    rows = np.arange(z.shape[0])
    m = z.max(axis=1)
    s = np.exp(z - m[:, None]).sum(axis=1)
    # (m - z_y) >= 0 且 log(s) >= 0，两项分开相加保证损失非负
    losses = (m - z[rows, y]) + np.log(s)
    grad = np.exp(z - m[:, None]) / s[:, None]
    grad[rows, y] -= 1.0
    return losses, grad


def cross_entropy(logits: np.ndarray, y: int) -> float:
    """单样本 softmax 交叉熵"""
    z = np.asarray(logits, dtype=ACC_DTYPE).reshape(1, -1)
    losses, _ = cross_entropy_batch(z, [int(y)])
    return float(losses[0])


def acceptable_mask(acceptable: Iterable[int], num_classes: int) -> np.ndarray:
    """可接受标签集合 -> 布尔掩码；集合为空或越界时抛出 InvalidLabelError"""
    idx = np.asarray(sorted(set(int(a) for a in acceptable)), dtype=np.int64)
    if idx.size == 0:
        raise InvalidLabelError("可接受标签集合不能为空")
    _check_labels(idx, num_classes)
    mask = np.zeros(num_classes, dtype=bool)
    mask[idx] = True
    return mask


def spec_loss_batch(
    lower: np.ndarray, upper: np.ndarray, masks: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    批量规范损失及其对 logit 下界/上界的梯度

    Args:
        lower: (N, C) logit 下界
        upper: (N, C) logit 上界
        masks: (N, C) 或 (C,) 可接受类别掩码

    Returns:
        (损失 (N,), 对下界的梯度 (N, C), 对上界的梯度 (N, C))，均为 float64
    """
    lo = np.asarray(lower, dtype=ACC_DTYPE)
    up = np.asarray(upper, dtype=ACC_DTYPE)
    mask = np.broadcast_to(np.asarray(masks, dtype=bool), lo.shape)
    if not mask.any(axis=1).all():
        raise InvalidLabelError("可接受标签集合不能为空")
    rows = np.arange(lo.shape[0])
    ref = np.where(mask, lo, -np.inf).argmax(axis=1)
    worst = np.where(mask, -np.inf, up)
    worst[rows, ref] = lo[rows, ref]
    m = worst.max(axis=1)
    e = np.exp(worst - m[:, None])
    s = e.sum(axis=1)
    losses = (m - worst[rows, ref]) + np.log(s)
    p = e / s[:, None]
    g_worst = p.copy()
    g_worst[rows, ref] -= 1.0
    g_lower = np.zeros_like(lo)
    g_lower[rows, ref] = g_worst[rows, ref]
    g_upper = np.where(mask, 0.0, g_worst)
    return losses, g_lower, g_upper


def spec_loss(logits: np.ndarray, acceptable: Iterable[int]) -> float:
    """具体 logit 向量上的规范损失（上下界重合的特例）"""
    z = np.asarray(logits, dtype=ACC_DTYPE).reshape(1, -1)
    mask = acceptable_mask(acceptable, z.shape[1])
    losses, _, _ = spec_loss_batch(z, z, mask)
    return float(losses[0])
