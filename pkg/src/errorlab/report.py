"""
误差剖面报告的汇总与输出
"""

import io
import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.certify.interval import SafetyDomain
from src.errorlab.profiles import (
    Candidate,
    conditional_from_losses,
    sample_losses,
    singleton_consistent,
    transient_from_losses,
    whole_domain_exceeds,
)
from src.errorlab.theorem import boundary_localization, theorem1_check
from src.models.error_models import BoundaryStats, ErrorAnalysisConfig, ErrorReport
from src.tensorcore.data import Dataset
from src.tensorcore.network import Network
from src.utils.exceptions import EmptyDatasetError, ShapeError
from src.utils.helpers import write_text_atomic

logger = logging.getLogger(__name__)


def analyze(
    net: Network,
    dataset: Dataset,
    domains: Sequence[SafetyDomain],
    cfg: ErrorAnalysisConfig,
    baseline: Optional[Network] = None,
    candidates: Optional[Sequence[Candidate]] = None,
    training_loss: Optional[float] = None,
    delta: Optional[float] = None,
) -> ErrorReport:
    """
    生成完整的误差剖面报告

    Args:
        net: 待分析网络（通常为安全域训练结果）
        dataset: 数据集
        domains: 训练所用安全域
        cfg: 分析配置
        baseline: 经验风险最小化得到的对照网络，给出时计算边界定位统计
        candidates: 条件误差候选域，默认使用 domains
        training_loss: 最终总训练损失，用于报告训练损失 ≥ δ 前提是否成立
        delta: 安全阈值 δ

    Returns:
        ErrorReport: 误差报告
    """
    dataset.require_nonempty()
    if dataset.input_dim != net.input_dim:
        raise ShapeError(f"数据集维度 {dataset.input_dim} 与网络输入维度 {net.input_dim} 不一致")
    losses = sample_losses(net, dataset, cfg.loss_kind)

    logger.info("步骤1: 检测瞬态误差与系统误差")
    transient, isolated, undersampled = transient_from_losses(dataset.x, losses, cfg)
    systematic = bool(np.all(losses > cfg.eta))

    logger.info("步骤2: 检验条件误差候选域")
    conditional, skipped = conditional_from_losses(
        dataset.x, losses, list(candidates) if candidates is not None else list(domains), cfg.eta
    )

    report = ErrorReport(
        transient=transient,
        isolated=isolated,
        undersampled=undersampled,
        systematic=systematic,
        systematic_as_conditional=whole_domain_exceeds(dataset.x, losses, cfg.eta),
        conditional=conditional,
        skipped=skipped,
        singleton_consistent=singleton_consistent(dataset.x, losses, transient, cfg),
    )

    if domains:
        logger.info("步骤3: 比较安全域内外的条件平均损失")
        try:
            report.theorem1 = theorem1_check(net, dataset, domains, cfg.loss_kind, training_loss, delta)
        except EmptyDatasetError as e:
            logger.warning(f"跳过域内外损失检验: {e}")
        if baseline is not None:
            logger.info("步骤4: 统计新增误差到安全域的距离")
            report.boundary_stats = boundary_localization(net, baseline, dataset, domains, cfg)
    logger.info(
        f"瞬态误差 {len(transient)} 个，孤立点 {len(isolated)} 个，邻居不足 {len(undersampled)} 个，系统误差={systematic}，"
        f"条件误差 {len(conditional)} 个"
    )
    return report


def histogram_frame(stats: BoundaryStats) -> pd.DataFrame:
    """直方图表，列为 bin_lower,bin_upper,count"""
    edges = stats.bin_edges
    return pd.DataFrame(
        {"bin_lower": edges[:-1], "bin_upper": edges[1:], "count": stats.counts},
        columns=["bin_lower", "bin_upper", "count"],
    )


def save_report(report: ErrorReport, path: Union[str, Path]) -> None:
    write_text_atomic(report.model_dump_json(indent=2), path)


def save_histogram_csv(stats: BoundaryStats, path: Union[str, Path]) -> None:
    buf = io.StringIO()
    histogram_frame(stats).to_csv(buf, index=False)
    write_text_atomic(buf.getvalue(), path)
