"""
安全域内外的条件损失与新增误差的边界定位
"""

import logging
from typing import Optional, Sequence

import numpy as np

from src.certify.interval import SafetyDomain, box_distances
from src.errorlab.profiles import sample_losses
from src.models.error_models import BoundaryStats, ErrorAnalysisConfig, Theorem1Result
from src.tensorcore.data import Dataset
from src.tensorcore.network import Network
from src.utils.exceptions import DomainError, EmptyDatasetError, ShapeError

logger = logging.getLogger(__name__)


def inside_any(x: np.ndarray, domains: Sequence[SafetyDomain]) -> np.ndarray:
    """样本是否落在 ∪D_i 内 (n,)"""
    mask = np.zeros(x.shape[0], dtype=bool)
    for d in domains:
        mask |= np.all((x >= d.lower) & (x <= d.upper), axis=1)
    return mask


def nearest_domain_distance(x: np.ndarray, domains: Sequence[SafetyDomain], norm: str = "l_inf") -> np.ndarray:
    """每个样本到最近安全域的距离（域内为 0）"""
    if not domains:
        raise DomainError("没有安全域，无法计算距离")
    lower = np.stack([d.lower for d in domains])
    upper = np.stack([d.upper for d in domains])
    return box_distances(x, lower, upper, norm).min(axis=1)  # type: ignore[arg-type]


def theorem1_check(
    net: Network,
    dataset: Dataset,
    domains: Sequence[SafetyDomain],
    loss_kind: str = "cross_entropy",
    training_loss: Optional[float] = None,
    delta: Optional[float] = None,
) -> Theorem1Result:
    """
    比较 ∪D_i 内外的经验平均损失

    Args:
        net: 网络
        dataset: 数据集
        domains: 训练所用安全域
        loss_kind: 逐样本损失类型
        training_loss: 最终总训练损失（可选）
        delta: 安全阈值 δ（可选）

    Returns:
        Theorem1Result: mean_in、mean_out 与 mean_in ≤ mean_out

    Raises:
        EmptyDatasetError: 任一侧没有样本
    """
    dataset.require_nonempty()
    inside = inside_any(dataset.x, domains)
    n_in, n_out = int(inside.sum()), int((~inside).sum())
    if n_in == 0 or n_out == 0:
        side = "安全域内" if n_in == 0 else "安全域外"
        raise EmptyDatasetError(f"{side}没有样本，无法比较条件平均损失")
    losses = sample_losses(net, dataset, loss_kind)
    mean_in, mean_out = float(losses[inside].mean()), float(losses[~inside].mean())
    side_condition = None
    if training_loss is not None and delta is not None:
        side_condition = training_loss >= delta
    return Theorem1Result(
        mean_in=mean_in, mean_out=mean_out, n_in=n_in, n_out=n_out,
        holds=mean_in <= mean_out, training_loss_ge_delta=side_condition,
    )


def boundary_localization(
    net_sd: Network,
    net_erm: Network,
    dataset: Dataset,
    domains: Sequence[SafetyDomain],
    cfg: ErrorAnalysisConfig,
) -> BoundaryStats:
    """
    安全域训练新引入的误差到最近安全域的距离分布

    新误差: net_sd 的损失比 net_erm 高出 η 以上的样本。
    """
    if (net_sd.input_dim, net_sd.output_dim) != (net_erm.input_dim, net_erm.output_dim):
        raise ShapeError("两个网络的输入/输出维度不一致")
    dataset.require_nonempty()
    diff = sample_losses(net_sd, dataset, cfg.loss_kind) - sample_losses(net_erm, dataset, cfg.loss_kind)
    new = np.flatnonzero(diff > cfg.eta)
    if new.size == 0:
        return BoundaryStats(locality_K=cfg.locality_K)
    dist = nearest_domain_distance(dataset.x[new], domains, cfg.norm)
    counts, edges = np.histogram(dist, bins=cfg.histogram_bins)
    within = float(np.mean(dist <= cfg.locality_K))
    logger.info(f"新增误差 {new.size} 个，其中 {within:.1%} 距最近安全域不超过 K={cfg.locality_K}")
    return BoundaryStats(
        bin_edges=edges.tolist(),
        counts=counts.astype(int).tolist(),
        n_new_errors=int(new.size),
        n_inside=int(np.sum(dist == 0)),
        fraction_within_K=within,
        locality_K=cfg.locality_K,
        error_indices=new.tolist(),
        distances=dist.tolist(),
    )
