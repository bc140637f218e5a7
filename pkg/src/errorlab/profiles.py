"""
三类误差剖面的检测

- 瞬态误差: 自身损失 > η，ε 邻域内（不含距离 0）至少 min_neighbors 个邻居且邻居损失全部 < η
- 系统误差: 所有样本损失 > η
- 条件误差: 候选域内平均损失 > η 且域外平均损失 < η

期望均以数据集上的经验均值代替。
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.certify.interval import BoxDomain, SafetyDomain
from src.models.error_models import ConditionalErrorEntry, ErrorAnalysisConfig, SkippedCandidate
from src.sdtrain.metrics import per_sample_losses, predictions
from src.tensorcore.data import Dataset
from src.tensorcore.network import Network

logger = logging.getLogger(__name__)

_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class IndexDomain:
    """按样本序号给出的候选域；complement 为空时取其余全部样本"""

    members: Tuple[int, ...]
    complement: Optional[Tuple[int, ...]] = None

    def masks(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        inside = np.zeros(n, dtype=bool)
        inside[list(self.members)] = True
        if self.complement is None:
            return inside, ~inside
        outside = np.zeros(n, dtype=bool)
        outside[list(self.complement)] = True
        return inside, outside & ~inside


Candidate = Union[BoxDomain, SafetyDomain, IndexDomain]


def candidate_masks(candidate: Candidate, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """候选域的 (域内, 域外) 样本掩码"""
    if isinstance(candidate, IndexDomain):
        return candidate.masks(x.shape[0])
    box = candidate.box if isinstance(candidate, SafetyDomain) else candidate
    inside = np.all((x >= box.lower) & (x <= box.upper), axis=1)
    return inside, ~inside


def sample_losses(net: Network, dataset: Dataset, loss_kind: str = "cross_entropy") -> np.ndarray:
    """逐样本损失；zero_one 为误分类指示"""
    if loss_kind == "zero_one":
        dataset.require_nonempty()
        return (predictions(net, dataset) != dataset.y).astype(np.float64)
    return per_sample_losses(net, dataset)


def _distances(x: np.ndarray, rows: np.ndarray, norm: str) -> np.ndarray:
    diff = np.abs(x[rows, None, :].astype(np.float64) - x[None, :, :])
    if norm == "l2":
        return np.sqrt((diff ** 2).sum(axis=2))
    return diff.max(axis=2)


def neighbor_lists(x: np.ndarray, rows: Sequence[int], epsilon: float, norm: str = "l_inf") -> Dict[int, np.ndarray]:
    """
    指定样本在 (0, ε] 距离内的邻居序号

    Args:
        x: (n, d) 样本输入
        rows: 需要求邻居的样本序号
        epsilon: 邻域半径
        norm: "l_inf" 或 "l2"
    """
    rows = np.asarray(rows, dtype=np.int64)
    out: Dict[int, np.ndarray] = {}
    step = max(1, _CHUNK_ELEMENTS // max(1, x.shape[0] * x.shape[1]))
    for start in range(0, rows.size, step):
        part = rows[start:start + step]
        dist = _distances(x, part, norm)
        for r, d in zip(part, dist):
            out[int(r)] = np.flatnonzero((d > 0) & (d <= epsilon))
    return out


def transient_from_losses(
    x: np.ndarray, losses: np.ndarray, cfg: ErrorAnalysisConfig
) -> Tuple[List[int], List[int], List[int]]:
    """
    由逐样本损失判定瞬态误差

    Returns:
        (瞬态误差序号, ε 内无邻居的高损失样本序号,
         邻居数在 1 到 min_neighbors-1 之间且邻居损失全部 < η 的高损失样本序号)
    """
    high = np.flatnonzero(losses > cfg.eta)
    neighbors = neighbor_lists(x, high, cfg.epsilon, cfg.norm)
    transient, isolated, undersampled = [], [], []
    for i in high.tolist():
        nb = neighbors[i]
        if nb.size == 0:
            isolated.append(i)
        elif not bool(np.all(losses[nb] < cfg.eta)):
            continue
        elif nb.size >= cfg.min_neighbors:
            transient.append(i)
        else:
            undersampled.append(i)
    return transient, isolated, undersampled


def transient_errors(net: Network, dataset: Dataset, cfg: ErrorAnalysisConfig) -> List[int]:
    dataset.require_nonempty()
    transient, _, _ = transient_from_losses(dataset.x, sample_losses(net, dataset, cfg.loss_kind), cfg)
    return transient


def systematic_error(net: Network, dataset: Dataset, cfg: ErrorAnalysisConfig) -> bool:
    dataset.require_nonempty()
    return bool(np.all(sample_losses(net, dataset, cfg.loss_kind) > cfg.eta))


def conditional_from_losses(
    x: np.ndarray, losses: np.ndarray, candidates: Sequence[Candidate], eta: float
) -> Tuple[List[ConditionalErrorEntry], List[SkippedCandidate]]:
    """
    逐个检验候选域

    Returns:
        (判定为条件误差的候选, 因一侧为空而跳过的候选)
    """
    found: List[ConditionalErrorEntry] = []
    skipped: List[SkippedCandidate] = []
    for cid, cand in enumerate(candidates):
        inside, outside = candidate_masks(cand, x)
        n_in, n_out = int(inside.sum()), int(outside.sum())
        if n_in == 0 or n_out == 0:
            side = "域内" if n_in == 0 else "域外"
            logger.warning(f"候选域 {cid} 的{side}没有样本，跳过")
            skipped.append(SkippedCandidate(domain_id=cid, reason=f"{side}样本为空"))
            continue
        mean_in, mean_out = float(losses[inside].mean()), float(losses[outside].mean())
        if mean_in > eta and mean_out < eta:
            found.append(ConditionalErrorEntry(
                domain_id=cid, mean_inside=mean_in, mean_outside=mean_out,
                n_inside=n_in, n_outside=n_out, is_error=True,
            ))
    return found, skipped


def conditional_errors(
    net: Network, dataset: Dataset, candidates: Sequence[Candidate], cfg: ErrorAnalysisConfig
) -> Tuple[List[ConditionalErrorEntry], List[SkippedCandidate]]:
    dataset.require_nonempty()
    return conditional_from_losses(dataset.x, sample_losses(net, dataset, cfg.loss_kind), candidates, cfg.eta)


def whole_domain_exceeds(x: np.ndarray, losses: np.ndarray, eta: float) -> bool:
    """
    把整个数据域作为候选域时域内平均损失是否 > η

    整域的补集为空，只检验域内一侧；系统误差成立时该结果必为真。
    """
    inside, _ = candidate_masks(IndexDomain(tuple(range(x.shape[0])), ()), x)
    if not inside.any():
        return False
    return float(losses[inside].mean()) > eta


def singleton_candidates(x: np.ndarray, indices: Sequence[int], epsilon: float, norm: str = "l_inf") -> List[IndexDomain]:
    """把样本包装为单点候选域，补集取其 ε 邻域"""
    neighbors = neighbor_lists(x, indices, epsilon, norm)
    return [IndexDomain((int(i),), tuple(int(j) for j in neighbors[int(i)])) for i in indices]


def singleton_consistent(x: np.ndarray, losses: np.ndarray, transient: Sequence[int], cfg: ErrorAnalysisConfig) -> bool:
    """每个瞬态误差作为单点候选域时都被判定为条件误差"""
    if not transient:
        return True
    found, _ = conditional_from_losses(x, losses, singleton_candidates(x, transient, cfg.epsilon, cfg.norm), cfg.eta)
    return len(found) == len(transient)
