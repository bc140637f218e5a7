"""
基于梯度的经验内层最大化

- fgsm: 单步快速梯度符号法
- pgd_batch / pgd_in_box: 盒内投影梯度上升（l_inf 符号步），返回规范损失最大的迭代点
"""

from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from src.certify.interval import BoxDomain
from src.models.attack_models import AttackConfig
from src.tensorcore.data import Sample
from src.tensorcore.losses import acceptable_mask, spec_loss_batch
from src.tensorcore.network import Gradient, Network
from src.tensorcore.tensor import check_batch, check_vector
from src.utils.exceptions import DomainError, NonFiniteError


def pixel_epsilon(steps_8bit: float) -> float:
    """8 位像素刻度上的 ±k 级扰动换算为归一化输入单位"""
    return float(steps_8bit) / 255.0


def spec_loss_grad(
    net: Network, x: np.ndarray, masks: np.ndarray, scale: float = 1.0
) -> Tuple[np.ndarray, Gradient]:
    """
    具体输入上的规范损失，及 scale × Σ损失 对参数与输入的梯度

    Args:
        net: 网络
        x: (n, d) 输入
        masks: (n, C) 或 (C,) 可接受类别掩码
        scale: 梯度缩放（取 1/n 即平均损失的梯度）

    Returns:
        (逐样本损失 (n,), 梯度；输入梯度形状 (n, d))
    """
    logits, caches = net.forward_with_cache(x)
    losses, g_lo, g_up = spec_loss_batch(logits, logits, masks)
    if not np.all(np.isfinite(losses)):
        raise NonFiniteError("规范损失出现非有限值")
    return losses, net.backward_from((g_lo + g_up) * scale, caches)


def _clamped_box(lower: np.ndarray, upper: np.ndarray, clamp: Optional[Tuple[float, float]]) -> Tuple[np.ndarray, np.ndarray]:
    if clamp is None:
        return lower, upper
    lo = np.maximum(lower, clamp[0]).astype(lower.dtype)
    up = np.minimum(upper, clamp[1]).astype(upper.dtype)
    if np.any(lo > up):
        raise DomainError(f"攻击区域与全局取值范围 {clamp} 无交集")
    return lo, up


def fgsm_batch(net: Network, x: np.ndarray, labels: Sequence[int], cfg: AttackConfig) -> np.ndarray:
    """批量 FGSM: x̃ = clamp(x + ε·sign(∂L/∂x))，结果保持在 ε 球内"""
    x = check_batch(x, net.input_dim)
    if cfg.epsilon == 0.0:
        return x.copy()
    masks = np.zeros((x.shape[0], net.output_dim), dtype=bool)
    for i, y in enumerate(labels):
        masks[i] = acceptable_mask([y], net.output_dim)
    _, grad = spec_loss_grad(net, x, masks)
    ball_lo, ball_hi = _clamped_box(x - cfg.epsilon, x + cfg.epsilon, cfg.clamp)
    adv = x.astype(np.float64) + cfg.epsilon * np.sign(grad.input)
    return np.clip(adv, ball_lo, ball_hi).astype(x.dtype)


def fgsm(net: Network, sample: Sample, cfg: AttackConfig) -> np.ndarray:
    """
    单样本 FGSM；cfg.steps 被忽略

    Args:
        net: 网络
        sample: 干净样本 (x, y)
        cfg: 攻击配置（使用 epsilon 与 clamp）

    Returns:
        np.ndarray: 对抗输入
    """
    x = check_vector(sample.x, net.input_dim)
    return fgsm_batch(net, x[None, :], [sample.y], cfg)[0]


def _random_starts(lower: np.ndarray, upper: np.ndarray, seed: int, sample_ids: Sequence[int]) -> np.ndarray:
    out = np.empty(lower.shape, dtype=np.float64)
    for row, sid in enumerate(sample_ids):
        rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, int(sid)])
        out[row] = rng.uniform(0.0, 1.0, size=lower.shape[1])
    return lower + out * (upper.astype(np.float64) - lower)


def pgd_batch(
    net: Network,
    lower: np.ndarray,
    upper: np.ndarray,
    masks: np.ndarray,
    cfg: AttackConfig,
    sample_ids: Optional[Sequence[int]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    批量盒内 PGD

    每个盒子的随机起点由 (cfg.seed, sample_id) 派生，结果与分块方式无关。
    步长未设置时逐维取 2.5 × 半宽 / steps。

    Args:
        net: 网络
        lower: (n, d) 盒子下界
        upper: (n, d) 盒子上界
        masks: (n, C) 可接受类别掩码
        cfg: 攻击配置
        sample_ids: 随机起点的派生键，默认 0..n-1

    Returns:
        (最坏输入 (n, d), 对应规范损失 (n,))
    """
    lower = check_batch(lower, net.input_dim, "盒子下界")
    upper = check_batch(upper, net.input_dim, "盒子上界")
    lo, up = _clamped_box(lower.astype(net.dtype), upper.astype(net.dtype), cfg.clamp)
    n = lo.shape[0]
    ids = list(range(n)) if sample_ids is None else list(sample_ids)
    half = (up.astype(np.float64) - lo) / 2
    step = np.full_like(half, cfg.step_size) if cfg.step_size is not None else 2.5 * half / cfg.steps

    if cfg.random_init:
        x = _random_starts(lo, up, cfg.seed, ids)
    else:
        x = (lo.astype(np.float64) + up) / 2
    x = np.clip(x.astype(net.dtype), lo, up)

    best_x = x.copy()
    best_loss = np.full(n, -np.inf)
    for _ in range(cfg.steps):
        losses, grad = spec_loss_grad(net, x, masks)
        better = losses > best_loss
        best_x[better], best_loss[better] = x[better], losses[better]
        x = np.clip(x + step * np.sign(grad.input), lo, up).astype(net.dtype)
    logits = net.forward_batch(x)
    losses, _, _ = spec_loss_batch(logits, logits, masks)
    better = losses > best_loss
    best_x[better], best_loss[better] = x[better], losses[better]
    return best_x, best_loss


def pgd_in_box(
    net: Network, box: BoxDomain, acceptable: Iterable[int], cfg: AttackConfig
) -> Tuple[np.ndarray, float]:
    """单个盒子上的 PGD，返回 (盒内最坏输入, 经验最坏规范损失)"""
    box.check_dim(net.input_dim)
    mask = acceptable_mask(acceptable, net.output_dim)
    x, loss = pgd_batch(net, box.lower[None, :], box.upper[None, :], mask[None, :], cfg)
    return x[0], float(loss[0])
