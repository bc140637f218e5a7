"""
区间与盒子安全域

IntervalTensor 保存逐元素的下界/上界；BoxDomain 是输入空间的轴对齐盒子；
SafetyDomain 把盒子与可接受标签集合 z_i 配对。
"""

from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Literal, Sequence, Tuple

import numpy as np

from src.tensorcore.tensor import DTYPE, check_finite
from src.utils.exceptions import DomainError, InvalidLabelError, ShapeError

Norm = Literal["l_inf", "l2"]

_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class IntervalTensor:
    """逐元素区间 [lower, upper]"""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        if self.lower.shape != self.upper.shape:
            raise ShapeError(f"区间上下界形状不一致: {self.lower.shape} vs {self.upper.shape}")
        check_finite(self.lower, "区间下界")
        check_finite(self.upper, "区间上界")
        if np.any(self.lower > self.upper):
            raise DomainError("区间下界大于上界")

    @property
    def center(self) -> np.ndarray:
        return (self.lower.astype(np.float64) + self.upper) / 2

    @property
    def radius(self) -> np.ndarray:
        return (self.upper.astype(np.float64) - self.lower) / 2

    def contains(self, values: np.ndarray, tol: float = 0.0) -> bool:
        v = np.asarray(values)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))


class BoxDomain:
    """轴对齐输入盒子 {x : lower ≤ x ≤ upper}"""

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        lo = np.asarray(lower, dtype=DTYPE).reshape(-1)
        up = np.asarray(upper, dtype=DTYPE).reshape(-1)
        if lo.shape != up.shape or lo.size == 0:
            raise DomainError(f"盒子上下界维度不一致: {lo.shape} vs {up.shape}")
        check_finite(lo, "盒子下界")
        check_finite(up, "盒子上界")
        bad = np.flatnonzero(lo > up)
        if bad.size:
            raise DomainError(f"盒子下界大于上界，维度 {bad[:5].tolist()}")
        self.lower = lo
        self.upper = up

    @classmethod
    def ball(cls, center: np.ndarray, epsilon: float) -> "BoxDomain":
        """l_inf ε 球"""
        if epsilon < 0:
            raise DomainError(f"ε 必须非负: {epsilon}")
        c = np.asarray(center, dtype=np.float64)
        return cls(c - epsilon, c + epsilon)

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    @property
    def center(self) -> np.ndarray:
        return (self.lower.astype(np.float64) + self.upper) / 2

    @property
    def half_width(self) -> np.ndarray:
        return (self.upper.astype(np.float64) - self.lower) / 2

    def check_dim(self, input_dim: int) -> None:
        if self.dim != input_dim:
            raise ShapeError(f"安全域维度 {self.dim} 与网络输入维度 {input_dim} 不一致")

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def contains_box(self, other: "BoxDomain") -> bool:
        return bool(np.all(self.lower <= other.lower) and np.all(other.upper <= self.upper))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def scaled(self, kappa: float) -> "BoxDomain":
        """以中心为基准把半宽缩放为 κ 倍（0 ≤ κ ≤ 1）"""
        if kappa >= 1.0:
            return self
        c, h = self.center, self.half_width * max(kappa, 0.0)
        return BoxDomain(np.maximum(c - h, self.lower), np.minimum(c + h, self.upper))

    def intersect(self, lo: float, hi: float) -> "BoxDomain":
        """与全局取值范围 [lo, hi] 求交；交集为空时抛出 DomainError"""
        return BoxDomain(np.maximum(self.lower, lo), np.minimum(self.upper, hi))

    def distance(self, x: np.ndarray, norm: Norm = "l_inf") -> float:
        return float(box_distances(np.asarray(x)[None, :], self.lower[None, :], self.upper[None, :], norm)[0, 0])

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """盒内均匀采样 (n, dim)"""
        u = rng.random((n, self.dim))
        return (self.lower + u * (self.upper.astype(np.float64) - self.lower)).astype(DTYPE)

    def __repr__(self) -> str:
        return f"BoxDomain(dim={self.dim})"


@dataclass(frozen=True)
class SafetyDomain:
    """安全域 (D_i, z_i)"""

    box: BoxDomain
    acceptable: FrozenSet[int]

    def __post_init__(self) -> None:
        if not self.acceptable:
            raise InvalidLabelError("安全域的可接受标签集合不能为空")
        if min(self.acceptable) < 0:
            raise InvalidLabelError(f"可接受标签不能为负: {sorted(self.acceptable)}")

    @classmethod
    def create(cls, lower: Sequence[float], upper: Sequence[float], acceptable: Iterable[int]) -> "SafetyDomain":
        return cls(BoxDomain(lower, upper), frozenset(int(a) for a in acceptable))

    @property
    def lower(self) -> np.ndarray:
        return self.box.lower

    @property
    def upper(self) -> np.ndarray:
        return self.box.upper

    def with_box(self, box: BoxDomain) -> "SafetyDomain":
        return SafetyDomain(box, self.acceptable)


def stack_domains(domains: Sequence[SafetyDomain], num_classes: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    把安全域列表打包为矩阵

    Returns:
        (下界 (k, d), 上界 (k, d), 可接受掩码 (k, num_classes))
    """
    if not domains:
        raise DomainError("安全域列表为空")
    lower = np.stack([d.lower for d in domains])
    upper = np.stack([d.upper for d in domains])
    masks = np.zeros((len(domains), num_classes), dtype=bool)
    for i, d in enumerate(domains):
        labels = sorted(d.acceptable)
        if labels[-1] >= num_classes:
            raise InvalidLabelError(f"安全域 {i} 的可接受标签越界: {labels}，类别数 {num_classes}")
        masks[i, labels] = True
    return lower, upper, masks


def box_distances(points: np.ndarray, lower: np.ndarray, upper: np.ndarray, norm: Norm = "l_inf") -> np.ndarray:
    """
    点到盒子的距离矩阵（逐维截断残差，盒内为 0）

    Args:
        points: (n, d)
        lower: (k, d)
        upper: (k, d)
        norm: "l_inf" 或 "l2"

    Returns:
        (n, k) float64
    """
    pts = np.asarray(points, dtype=np.float64)
    lo = np.asarray(lower, dtype=np.float64)[None, :, :]
    up = np.asarray(upper, dtype=np.float64)[None, :, :]
    out = np.empty((pts.shape[0], lo.shape[1]), dtype=np.float64)
    # 按点分块，避免 (n, k, d) 中间数组过大
    step = max(1, _CHUNK_ELEMENTS // max(1, lo.shape[1] * lo.shape[2]))
    for start in range(0, pts.shape[0], step):
        p = pts[start:start + step, None, :]
        residual = np.maximum(np.maximum(lo - p, p - up), 0.0)
        if norm == "l2":
            out[start:start + step] = np.sqrt((residual ** 2).sum(axis=2))
        else:
            out[start:start + step] = residual.max(axis=2)
    return out


def domains_from_arrays(lower: np.ndarray, upper: np.ndarray, acceptable: Iterable[int]) -> List[SafetyDomain]:
    """同一可接受集合的一批盒子"""
    labels = frozenset(int(a) for a in acceptable)
    return [SafetyDomain(BoxDomain(lo, up), labels) for lo, up in zip(lower, upper)]
