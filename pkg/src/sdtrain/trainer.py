"""
安全域训练主循环

每轮按随机顺序遍历训练样本（批大小 b_t），每步同时从本轮打乱的安全域序列中循环取 b_s 个，
更新 θ ← θ - α(∇_ERM + λ∇_safety)。每 safety_check_period 轮在全部安全域上评估认证的
safety_bound；当 (轮数 ≥ i_min 且 safety_bound ≤ δ) 或达到 max_epochs 时停止。

样本顺序与安全域顺序使用两个独立派生的随机流，λ=0 时与纯经验风险最小化逐位一致。
"""

import io
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.certify.bounds import domain_bounds
from src.certify.interval import SafetyDomain
from src.models.train_models import EpochTrace, TrainConfig, TrainReport
from src.sdtrain.metrics import evaluate, mean_loss
from src.sdtrain.objectives import empirical_risk_grad, safety_term_grad
from src.tensorcore.data import Dataset
from src.tensorcore.network import Network
from src.tensorcore.optim import MomentumSGD
from src.utils.exceptions import ConflictError, NonFiniteError, ShapeError
from src.utils.helpers import derive_seed, write_text_atomic

logger = logging.getLogger(__name__)


def check_non_conflicting(dataset: Dataset, domains: Sequence[SafetyDomain]) -> None:
    """
    非冲突数据假设：位于安全域内的训练样本必须带有可接受标签

    Raises:
        ConflictError: 第一对冲突的 (样本, 安全域)
    """
    for j, d in enumerate(domains):
        inside = np.all((dataset.x >= d.lower) & (dataset.x <= d.upper), axis=1)
        if not inside.any():
            continue
        bad = inside & ~np.isin(dataset.y, sorted(d.acceptable))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ConflictError(i, j, int(dataset.y[i]))


def _ramp_factor(epoch: int, ramp_epochs: int) -> float:
    return 1.0 if ramp_epochs <= 0 else min(1.0, epoch / ramp_epochs)


def _safety_bound(net: Network, domains: Sequence[SafetyDomain]) -> float:
    bounds = domain_bounds(net, domains)
    return float(bounds.max()) if bounds.size else 0.0


def train(
    net: Network,
    dataset: Dataset,
    domains: Sequence[SafetyDomain],
    cfg: TrainConfig,
    val_dataset: Optional[Dataset] = None,
    progress: bool = True,
) -> Tuple[Network, TrainReport]:
    """
    安全域训练

    Args:
        net: 初始网络
        dataset: 训练集
        domains: 安全域列表，可为空（即经验风险最小化）
        cfg: 训练配置
        val_dataset: 可选验证集，仅用于报告
        progress: 是否显示进度条

    Returns:
        (训练后的网络, 训练报告)
    """
    dataset.require_nonempty("训练集")
    if dataset.input_dim != net.input_dim:
        raise ShapeError(f"训练集维度 {dataset.input_dim} 与网络输入维度 {net.input_dim} 不一致")
    for d in domains:
        d.box.check_dim(net.input_dim)
    if cfg.check_conflicts and domains:
        check_non_conflicting(dataset, domains)

    n, k = len(dataset), len(domains)
    use_safety = k > 0 and cfg.lambda_ > 0
    sample_rng = np.random.default_rng(derive_seed(cfg.seed, "samples"))
    domain_rng = np.random.default_rng(derive_seed(cfg.seed, "domains"))
    optimizer = MomentumSGD(cfg.learning_rate, cfg.momentum)

    bound = float("inf") if k else 0.0
    trace: List[EpochTrace] = []
    epoch = 0
    logger.info(f"开始训练: 样本 {n}，安全域 {k}，模式 {cfg.inner_mode}，λ={cfg.lambda_}，δ={cfg.delta}")
    bar = tqdm(total=cfg.max_epochs, desc="训练", unit="轮", disable=not progress)
    # λ = 0 时只记录认证界，不以其决定停止
    while (epoch < cfg.min_epochs or (use_safety and bound > cfg.delta)) and epoch < cfg.max_epochs:
        epoch += 1
        kappa = _ramp_factor(epoch, cfg.ramp_epochs)
        order = sample_rng.permutation(n)
        d_order = domain_rng.permutation(k) if use_safety else None
        d_pos = 0
        train_losses: List[float] = []
        safety_terms: List[float] = []
        for step, start in enumerate(range(0, n, cfg.batch_train)):
            loss, grad = empirical_risk_grad(net, dataset.subset(order[start:start + cfg.batch_train]))
            train_losses.append(loss)
            if use_safety:
                assert d_order is not None
                take = [int(d_order[(d_pos + j) % k]) for j in range(min(cfg.batch_safety, k))]
                d_pos = (d_pos + len(take)) % k
                batch = [domains[i] if kappa >= 1.0 else domains[i].with_box(domains[i].box.scaled(kappa)) for i in take]
                attack = cfg.attack.model_copy(update={"seed": derive_seed(cfg.seed, "pgd", epoch, step)})
                s_loss, s_grad = safety_term_grad(net, batch, cfg.inner_mode, attack)
                safety_terms.append(s_loss)
                grad = grad + s_grad.scaled(cfg.lambda_)
            try:
                net = optimizer.step(net, grad)
            except NonFiniteError as e:
                logger.error(f"错误: 第 {epoch} 轮第 {step} 步梯度非有限，训练中止: {e}")
                raise

        evaluated = False
        last = epoch >= cfg.max_epochs or (not use_safety and epoch >= cfg.min_epochs)
        if k and (epoch % cfg.safety_check_period == 0 or last):
            bound, evaluated = _safety_bound(net, domains), True
        if use_safety and not evaluated and epoch >= cfg.min_epochs and bound <= cfg.delta:
            # 旧的 bound 不能作为停止依据
            bound, evaluated = _safety_bound(net, domains), True

        entry = EpochTrace(
            epoch=epoch,
            train_loss=float(np.mean(train_losses)),
            safety_term=float(np.mean(safety_terms)) if safety_terms else 0.0,
            certified_bound=bound if evaluated else None,
        )
        trace.append(entry)
        bound_text = f"{entry.certified_bound:.4f}" if entry.certified_bound is not None else "-"
        logger.info(
            f"轮次 {epoch}: train_loss={entry.train_loss:.4f}, safety_term={entry.safety_term:.4f}, bound={bound_text}"
        )
        bar.update(1)
        bar.set_postfix(loss=f"{entry.train_loss:.3f}", bound=bound_text)
    bar.close()

    report = _build_report(net, dataset, domains, cfg, val_dataset, epoch, bound, trace)
    logger.info(
        f"训练结束: 轮数 {report.epochs_run}，safety_bound={report.final_safety_bound:.4f}，"
        f"收敛={report.converged}，训练准确率={report.train_accuracy:.3f}"
    )
    return net, report


def _build_report(
    net: Network,
    dataset: Dataset,
    domains: Sequence[SafetyDomain],
    cfg: TrainConfig,
    val_dataset: Optional[Dataset],
    epochs: int,
    bound: float,
    trace: List[EpochTrace],
) -> TrainReport:
    if domains and not np.isfinite(bound):
        bound = _safety_bound(net, domains)
    risk = mean_loss(net, dataset)
    mean_bound = float(domain_bounds(net, domains).mean()) if domains else 0.0
    total = risk + cfg.lambda_ * mean_bound
    return TrainReport(
        epochs_run=epochs,
        final_safety_bound=bound,
        converged=bound <= cfg.delta,
        inner_mode=cfg.inner_mode,
        num_domains=len(domains),
        delta=cfg.delta,
        train_accuracy=evaluate(net, dataset),
        val_accuracy=evaluate(net, val_dataset) if val_dataset is not None and len(val_dataset) else None,
        total_training_loss=total,
        delta_lower_bounds_loss=total >= cfg.delta,
        trace=trace,
    )


def trace_frame(report: TrainReport) -> pd.DataFrame:
    """训练轨迹表，列为 epoch,train_loss,safety_term,certified_bound"""
    return pd.DataFrame(
        [t.model_dump() for t in report.trace],
        columns=["epoch", "train_loss", "safety_term", "certified_bound"],
    )


def save_trace_csv(report: TrainReport, path: Union[str, Path]) -> None:
    buf = io.StringIO()
    trace_frame(report).to_csv(buf, index=False)
    write_text_atomic(buf.getvalue(), path)
