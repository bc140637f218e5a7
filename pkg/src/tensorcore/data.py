"""
样本与数据集

Dataset 以 (N, input_dim) 的 float32 矩阵和 (N,) 标签向量存储，Sample 是其中一行的只读视图。
"""

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from src.tensorcore.tensor import DTYPE, check_finite
from src.utils.exceptions import EmptyDatasetError, InvalidLabelError, ShapeError


@dataclass(frozen=True)
class Sample:
    """训练样本 (x, y)"""

    x: np.ndarray
    y: int


class Dataset:
    """有限样本集合 {(x_i, y_i)}"""

    def __init__(self, x: np.ndarray, y: Sequence[int], num_classes: int):
        x = np.ascontiguousarray(np.asarray(x, dtype=DTYPE))
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        if x.ndim != 2:
            raise ShapeError(f"数据集输入必须是二维矩阵 (N, input_dim)，实际形状 {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise ShapeError(f"输入数 {x.shape[0]} 与标签数 {y.shape[0]} 不一致")
        if num_classes < 1:
            raise InvalidLabelError(f"类别数必须为正: {num_classes}")
        if y.size and (y.min() < 0 or y.max() >= num_classes):
            raise InvalidLabelError(f"标签越界: 有效范围 [0, {num_classes})")
        check_finite(x, "数据集输入")
        self.x = x
        self.y = y
        self.num_classes = int(num_classes)

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], input_dim: int, num_classes: int) -> "Dataset":
        if not samples:
            return cls(np.zeros((0, input_dim), dtype=DTYPE), [], num_classes)
        return cls(np.stack([np.asarray(s.x) for s in samples]), [s.y for s in samples], num_classes)

    @property
    def input_dim(self) -> int:
        return int(self.x.shape[1])

    def __len__(self) -> int:
        return int(self.x.shape[0])

    def __getitem__(self, index: int) -> Sample:
        return Sample(self.x[index], int(self.y[index]))

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self[i]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.x[idx], self.y[idx], self.num_classes)

    def require_nonempty(self, what: str = "数据集") -> None:
        if len(self) == 0:
            raise EmptyDatasetError(f"{what}为空")

    def label_histogram(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.num_classes)
