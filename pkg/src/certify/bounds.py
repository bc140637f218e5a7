"""
区间界传播 (IBP) 与认证最坏情况损失

逐层以中心-半径形式传播输入盒子，得到 logits 的可靠上下界；
再用规范损失把上下界转换为盒内最大损失的上界。批量版本同时返回该上界对参数的梯度，
训练时直接对上界做梯度下降。

界在网络精度（默认 float32）下计算，不做定向舍入。
"""

import logging
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from src.certify.interval import BoxDomain, IntervalTensor, SafetyDomain, stack_domains
from src.config.settings import settings
from src.tensorcore.losses import acceptable_mask, spec_loss_batch
from src.tensorcore.network import Gradient, Network
from src.utils.exceptions import NonFiniteError

logger = logging.getLogger(__name__)


def _center_radius(lower: np.ndarray, upper: np.ndarray, dtype: np.dtype) -> Tuple[np.ndarray, np.ndarray]:
    lo = np.asarray(lower, dtype=np.float64)
    up = np.asarray(upper, dtype=np.float64)
    mu = ((lo + up) / 2).astype(dtype)
    r64 = np.maximum(mu - lo, up - mu)
    r = r64.astype(dtype)
    # 舍入后 [mu - r, mu + r] 仍须覆盖原盒子
    r = np.where(r.astype(np.float64) < r64, np.nextafter(r, np.inf), r).astype(dtype)
    return mu, r


def propagate_batch(net: Network, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """批量盒子 (k, d) 的 logit 下界与上界 (k, C)"""
    mu, r = _center_radius(lower, upper, net.dtype)
    m, rad, _ = net.forward_interval(mu, r)
    return m - rad, m + rad


def propagate(net: Network, box: BoxDomain) -> IntervalTensor:
    """
    对单个输入盒子做区间传播

    Args:
        net: 网络
        box: 输入盒子，维度须等于 input_dim

    Returns:
        IntervalTensor: logits 的逐元素界
    """
    box.check_dim(net.input_dim)
    lo, up = propagate_batch(net, box.lower[None, :], box.upper[None, :])
    return IntervalTensor(lo[0], up[0])


def certified_losses_and_grad(
    net: Network,
    lower: np.ndarray,
    upper: np.ndarray,
    masks: np.ndarray,
    need_grad: bool = True,
) -> Tuple[np.ndarray, Optional[Gradient]]:
    """
    批量认证损失上界，以及其均值对网络参数的梯度

    Args:
        net: 网络
        lower: (k, d) 盒子下界
        upper: (k, d) 盒子上界
        masks: (k, C) 可接受类别掩码
        need_grad: 为 False 时只做前向

    Returns:
        (每个盒子的上界 (k,) float64, 平均上界的梯度或 None)
    """
    mu, r = _center_radius(lower, upper, net.dtype)
    m, rad, caches = net.forward_interval(mu, r)
    lo = m.astype(np.float64) - rad
    up = m.astype(np.float64) + rad
    losses, g_lo, g_up = spec_loss_batch(lo, up, masks)
    if not np.all(np.isfinite(losses)):
        raise NonFiniteError("认证损失上界出现非有限值")
    if not need_grad:
        return losses, None
    k = losses.shape[0]
    grad = net.backward_interval((g_lo + g_up) / k, (g_up - g_lo) / k, caches)
    return losses, grad


def certified_worst_case_loss(net: Network, box: BoxDomain, acceptable: Iterable[int]) -> float:
    """盒内规范损失最大值的可靠上界；可接受集合为空时抛出 InvalidLabelError"""
    box.check_dim(net.input_dim)
    mask = acceptable_mask(acceptable, net.output_dim)
    losses, _ = certified_losses_and_grad(net, box.lower[None, :], box.upper[None, :], mask[None, :], False)
    return float(losses[0])


def is_certified(net: Network, box: BoxDomain, acceptable: Iterable[int], delta: float) -> bool:
    return certified_worst_case_loss(net, box, acceptable) <= delta


def domain_bounds(net: Network, domains: Sequence[SafetyDomain], chunk_size: Optional[int] = None) -> np.ndarray:
    """全部安全域的认证上界 (k,)，按块向量化计算"""
    if not domains:
        return np.zeros(0, dtype=np.float64)
    for d in domains:
        d.box.check_dim(net.input_dim)
    chunk = chunk_size or settings.CHUNK_SIZE
    out = []
    for start in range(0, len(domains), chunk):
        lower, upper, masks = stack_domains(domains[start:start + chunk], net.output_dim)
        losses, _ = certified_losses_and_grad(net, lower, upper, masks, need_grad=False)
        out.append(losses)
    return np.concatenate(out)


def safety_bound(net: Network, domains: Sequence[SafetyDomain], chunk_size: Optional[int] = None) -> float:
    """safety_bound = max_i 认证上界；无安全域时为 0"""
    bounds = domain_bounds(net, domains, chunk_size)
    value = float(bounds.max()) if bounds.size else 0.0
    logger.debug(f"safety_bound = {value:.6f} (k={len(domains)})")
    return value
