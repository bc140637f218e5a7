"""
攻击评估：对抗准确率与逐样本攻击记录
"""

import logging
from pathlib import Path
from typing import List, Literal, Sequence, Union

import numpy as np
from tqdm import tqdm

from src.attacks.gradient_attacks import fgsm_batch, pgd_batch
from src.certify.interval import SafetyDomain, stack_domains
from src.config.settings import settings
from src.models.attack_models import AttackConfig, AttackRecord
from src.tensorcore.data import Dataset
from src.tensorcore.losses import spec_loss_batch
from src.tensorcore.network import Network
from src.tensorcore.tensor import check_finite
from src.utils.exceptions import ShapeError
from src.utils.helpers import write_text_atomic

logger = logging.getLogger(__name__)

AttackMethod = Literal["fgsm", "pgd"]


def _label_masks(labels: np.ndarray, num_classes: int) -> np.ndarray:
    masks = np.zeros((labels.shape[0], num_classes), dtype=bool)
    masks[np.arange(labels.shape[0]), labels] = True
    return masks


def _attack_chunk(net: Network, x: np.ndarray, y: np.ndarray, cfg: AttackConfig,
                  method: AttackMethod, ids: Sequence[int]) -> np.ndarray:
    if method == "fgsm" or cfg.epsilon == 0.0:
        return fgsm_batch(net, x, y, cfg)
    adv, _ = pgd_batch(net, x - cfg.epsilon, x + cfg.epsilon, _label_masks(y, net.output_dim), cfg, ids)
    return adv


def _check_dataset(net: Network, dataset: Dataset) -> None:
    dataset.require_nonempty()
    if dataset.input_dim != net.input_dim:
        raise ShapeError(f"数据集维度 {dataset.input_dim} 与网络输入维度 {net.input_dim} 不一致")


def adversarial_accuracy(net: Network, dataset: Dataset, cfg: AttackConfig,
                         method: AttackMethod = "fgsm") -> float:
    """
    逐样本攻击后仍被正确分类的比例

    Args:
        net: 网络
        dataset: 非空数据集
        cfg: 攻击配置
        method: "fgsm" 或 "pgd"（ε 球内）

    Returns:
        float: [0, 1] 内的对抗准确率
    """
    _check_dataset(net, dataset)
    correct = 0
    chunk = settings.CHUNK_SIZE
    for start in range(0, len(dataset), chunk):
        idx = np.arange(start, min(start + chunk, len(dataset)))
        adv = _attack_chunk(net, dataset.x[idx], dataset.y[idx], cfg, method, idx.tolist())
        correct += int((net.predict(adv) == dataset.y[idx]).sum())
    return correct / len(dataset)


def attack_dataset(net: Network, dataset: Dataset, cfg: AttackConfig,
                   method: AttackMethod = "pgd") -> List[AttackRecord]:
    """对每个样本在其 ε 球内攻击，攻击后类别不等于标签即为成功"""
    _check_dataset(net, dataset)
    records: List[AttackRecord] = []
    chunk = settings.CHUNK_SIZE
    for start in tqdm(range(0, len(dataset), chunk), desc="攻击样本", unit="批"):
        idx = np.arange(start, min(start + chunk, len(dataset)))
        x, y = dataset.x[idx], dataset.y[idx]
        masks = _label_masks(y, net.output_dim)
        adv = _attack_chunk(net, x, y, cfg, method, idx.tolist())
        clean_logits, adv_logits = net.forward_batch(x), net.forward_batch(adv)
        check_finite(adv_logits, "攻击后 logits")
        before, _, _ = spec_loss_batch(clean_logits, clean_logits, masks)
        after, _, _ = spec_loss_batch(adv_logits, adv_logits, masks)
        for j, i in enumerate(idx):
            attacked = int(adv_logits[j].argmax())
            records.append(AttackRecord(
                sample_index=int(i),
                clean_label=int(clean_logits[j].argmax()),
                attacked_label=attacked,
                loss_before=float(before[j]),
                loss_after=float(after[j]),
                success=attacked != int(y[j]),
            ))
    return records


def attack_domains(net: Network, domains: Sequence[SafetyDomain], cfg: AttackConfig) -> List[AttackRecord]:
    """
    在每个安全域内做 PGD

    clean_label 与 loss_before 取盒中心；攻击后类别不在可接受集合内即为成功。
    """
    records: List[AttackRecord] = []
    chunk = settings.CHUNK_SIZE
    for start in tqdm(range(0, len(domains), chunk), desc="攻击安全域", unit="批"):
        part = domains[start:start + chunk]
        lower, upper, masks = stack_domains(part, net.output_dim)
        if lower.shape[1] != net.input_dim:
            raise ShapeError(f"安全域维度 {lower.shape[1]} 与网络输入维度 {net.input_dim} 不一致")
        centers = ((lower.astype(np.float64) + upper) / 2).astype(net.dtype)
        adv, after = pgd_batch(net, lower, upper, masks, cfg, range(start, start + len(part)))
        clean_logits, adv_logits = net.forward_batch(centers), net.forward_batch(adv)
        before, _, _ = spec_loss_batch(clean_logits, clean_logits, masks)
        for j in range(len(part)):
            attacked = int(adv_logits[j].argmax())
            records.append(AttackRecord(
                sample_index=start + j,
                clean_label=int(clean_logits[j].argmax()),
                attacked_label=attacked,
                loss_before=float(before[j]),
                loss_after=float(after[j]),
                success=not bool(masks[j, attacked]),
            ))
    return records


def save_attack_records(records: Sequence[AttackRecord], path: Union[str, Path]) -> None:
    """JSON lines，每行一条记录"""
    write_text_atomic("".join(r.model_dump_json() + "\n" for r in records), path)
    logger.debug(f"攻击记录已保存: {path} ({len(records)} 条)")
