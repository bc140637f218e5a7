"""
张量基础工具

张量统一用 float32 的 numpy 数组表示（行优先存储），归约运算在 float64 中累加。
"""

from typing import Iterable, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from src.utils.exceptions import NonFiniteError, ShapeError

Tensor = npt.NDArray[np.float32]

DTYPE = np.float32
ACC_DTYPE = np.float64


def as_tensor(values: Union[Sequence[float], npt.ArrayLike], shape: Optional[Iterable[int]] = None) -> Tensor:
    """
    将输入转换为有限的 float32 张量

    Args:
        values: 数值序列或数组
        shape: 期望形状，给出时按行优先重排并校验元素个数

    Returns:
        Tensor: 新的 float32 数组
    """
    arr = np.array(values, dtype=DTYPE)
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if any(s <= 0 for s in shape):
            raise ShapeError(f"形状必须为正整数序列: {shape}")
        if int(np.prod(shape)) != arr.size:
            raise ShapeError(f"元素个数 {arr.size} 与形状 {shape} 不符")
        arr = arr.reshape(shape)
    check_finite(arr, "张量")
    return arr


def check_finite(arr: npt.ArrayLike, what: str = "张量") -> None:
    """出现 NaN/Inf 时抛出 NonFiniteError"""
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{what}中包含非有限值 (NaN/Inf)")


def check_vector(x: npt.ArrayLike, length: int, what: str = "输入") -> Tensor:
    """校验一维输入长度，返回浮点数组"""
    arr = _floating(x)
    if arr.ndim != 1 or arr.shape[0] != length:
        raise ShapeError(f"{what}维度不匹配: 期望长度 {length}，实际形状 {arr.shape}")
    return arr


def check_batch(x: npt.ArrayLike, length: int, what: str = "输入批") -> Tensor:
    """校验二维批输入 (N, length)"""
    arr = _floating(x)
    if arr.ndim != 2 or arr.shape[1] != length:
        raise ShapeError(f"{what}维度不匹配: 期望 (N, {length})，实际形状 {arr.shape}")
    return arr


def _floating(x: npt.ArrayLike) -> np.ndarray:
    """保留已有浮点精度，其余类型转为 float32"""
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(DTYPE)
    return arr
