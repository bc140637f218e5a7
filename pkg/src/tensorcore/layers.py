"""
网络层定义

每一层同时提供三种计算：
- forward / backward: 普通前向与反向模式求导（批量，首维为样本）
- forward_interval / backward_interval: 中心-半径形式的区间传播及其对参数的导数，
  供认证训练直接对区间上界求梯度

所有乘加在 float64 中累加，输出转换回参数的 dtype（默认 float32）。
"""

from abc import ABC, abstractmethod
from typing import Any, List, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.tensorcore.tensor import ACC_DTYPE, check_finite
from src.utils.exceptions import ShapeError

Shape = Tuple[int, ...]


class Layer(ABC):
    """网络层基类"""

    kind: str = ""

    def params(self) -> List[np.ndarray]:
        """可训练参数（顺序固定）"""
        return []

    def with_params(self, params: Sequence[np.ndarray]) -> "Layer":
        """返回替换参数后的新层；无参数层返回自身"""
        return self

    def astype(self, dtype: Any) -> "Layer":
        return self.with_params([p.astype(dtype) for p in self.params()])

    @abstractmethod
    def output_shape(self, in_shape: Shape) -> Shape:
        """给定单样本输入形状，返回输出形状；不匹配时抛出 ShapeError"""

    @abstractmethod
    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        """前向计算，返回 (输出, 反向所需缓存)"""

    @abstractmethod
    def backward(self, grad_out: np.ndarray, cache: Any) -> Tuple[np.ndarray, List[np.ndarray]]:
        """反向计算，返回 (输入梯度, 参数梯度列表)"""

    @abstractmethod
    def forward_interval(self, mu: np.ndarray, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Any]:
        """区间前向，区间以中心 mu 与半径 r 表示"""

    @abstractmethod
    def backward_interval(
        self, grad_mu: np.ndarray, grad_r: np.ndarray, cache: Any
    ) -> Tuple[np.ndarray, np.ndarray, List[np.ndarray]]:
        """区间反向，返回 (中心梯度, 半径梯度, 参数梯度列表)"""


class Dense(Layer):
    """全连接层 y = W x + b，W 形状 (out_features, in_features)"""

    kind = "dense"

    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        weights = np.asarray(weights)
        bias = np.asarray(bias, dtype=weights.dtype)
        if weights.ndim != 2 or bias.shape != (weights.shape[0],):
            raise ShapeError(f"Dense 参数形状不一致: weights {weights.shape}, bias {bias.shape}")
        check_finite(weights, "Dense 权重")
        check_finite(bias, "Dense 偏置")
        self.weights = weights
        self.bias = bias

    @property
    def in_features(self) -> int:
        return int(self.weights.shape[1])

    @property
    def out_features(self) -> int:
        return int(self.weights.shape[0])

    def params(self) -> List[np.ndarray]:
        return [self.weights, self.bias]

    def with_params(self, params: Sequence[np.ndarray]) -> "Dense":
        return Dense(params[0], params[1])

    def output_shape(self, in_shape: Shape) -> Shape:
        if in_shape != (self.in_features,):
            raise ShapeError(f"Dense 输入维度不匹配: 期望 ({self.in_features},)，实际 {in_shape}")
        return (self.out_features,)

    def _affine(self, x: np.ndarray) -> np.ndarray:
        out = x.astype(ACC_DTYPE) @ self.weights.astype(ACC_DTYPE).T + self.bias.astype(ACC_DTYPE)
        return out.astype(self.weights.dtype)

    def _linear(self, x: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return (x.astype(ACC_DTYPE) @ weights.T).astype(self.weights.dtype)

    def _param_grads(self, grad_out: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        g = grad_out.astype(ACC_DTYPE)
        return g.T @ x.astype(ACC_DTYPE), g.sum(axis=0)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        return self._affine(x), x

    def backward(self, grad_out: np.ndarray, cache: Any) -> Tuple[np.ndarray, List[np.ndarray]]:
        dt = self.weights.dtype
        d_w, d_b = self._param_grads(grad_out, cache)
        grad_in = self._linear(grad_out, self.weights.astype(ACC_DTYPE).T)
        return grad_in, [d_w.astype(dt), d_b.astype(dt)]

    def forward_interval(self, mu: np.ndarray, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Any]:
        abs_w = np.abs(self.weights.astype(ACC_DTYPE))
        return self._affine(mu), self._linear(r, abs_w), (mu, r)

    def backward_interval(
        self, grad_mu: np.ndarray, grad_r: np.ndarray, cache: Any
    ) -> Tuple[np.ndarray, np.ndarray, List[np.ndarray]]:
        dt = self.weights.dtype
        mu, r = cache
        w = self.weights.astype(ACC_DTYPE)
        d_w, d_b = self._param_grads(grad_mu, mu)
        d_w_abs, _ = self._param_grads(grad_r, r)
        d_w = d_w + np.sign(w) * d_w_abs
        g_mu = self._linear(grad_mu, w.T)
        g_r = self._linear(grad_r, np.abs(w).T)
        return g_mu, g_r, [d_w.astype(dt), d_b.astype(dt)]


class Conv1D(Layer):
    """一维卷积层，kernels 形状 (out_channels, in_channels, kernel_size)，显式零填充"""

    kind = "conv1d"

    def __init__(self, kernels: np.ndarray, bias: np.ndarray, stride: int = 1, padding: int = 0):
        kernels = np.asarray(kernels)
        bias = np.asarray(bias, dtype=kernels.dtype)
        if kernels.ndim != 3 or bias.shape != (kernels.shape[0],):
            raise ShapeError(f"Conv1D 参数形状不一致: kernels {kernels.shape}, bias {bias.shape}")
        if stride < 1 or padding < 0:
            raise ShapeError(f"Conv1D 步长必须为正、填充必须非负: stride={stride}, padding={padding}")
        check_finite(kernels, "Conv1D 卷积核")
        check_finite(bias, "Conv1D 偏置")
        self.kernels = kernels
        self.bias = bias
        self.stride = int(stride)
        self.padding = int(padding)

    @property
    def out_channels(self) -> int:
        return int(self.kernels.shape[0])

    @property
    def in_channels(self) -> int:
        return int(self.kernels.shape[1])

    @property
    def kernel_size(self) -> int:
        return int(self.kernels.shape[2])

    def params(self) -> List[np.ndarray]:
        return [self.kernels, self.bias]

    def with_params(self, params: Sequence[np.ndarray]) -> "Conv1D":
        return Conv1D(params[0], params[1], self.stride, self.padding)

    def out_length(self, length: int) -> int:
        return (length + 2 * self.padding - self.kernel_size) // self.stride + 1

    def output_shape(self, in_shape: Shape) -> Shape:
        if len(in_shape) != 2 or in_shape[0] != self.in_channels:
            raise ShapeError(f"Conv1D 输入维度不匹配: 期望 ({self.in_channels}, L)，实际 {in_shape}")
        out_len = self.out_length(in_shape[1])
        if out_len < 1:
            raise ShapeError(f"Conv1D 输入长度 {in_shape[1]} 小于卷积核 {self.kernel_size}")
        return (self.out_channels, out_len)

    def _columns(self, x: np.ndarray) -> np.ndarray:
        """(N, C, L) -> (N*L_out, C*K) 的展开矩阵"""
        n, c, _ = x.shape
        xp = np.pad(x.astype(ACC_DTYPE), ((0, 0), (0, 0), (self.padding, self.padding)))
        windows = sliding_window_view(xp, self.kernel_size, axis=2)[:, :, :: self.stride, :]
        out_len = windows.shape[2]
        return windows.transpose(0, 2, 1, 3).reshape(n * out_len, c * self.kernel_size)

    def _apply(self, cols: np.ndarray, kernels: np.ndarray, n: int, bias: bool) -> np.ndarray:
        out = cols @ kernels.reshape(self.out_channels, -1).T
        if bias:
            out = out + self.bias.astype(ACC_DTYPE)
        return out.reshape(n, -1, self.out_channels).transpose(0, 2, 1).astype(self.kernels.dtype)

    def _flat_grad(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out.astype(ACC_DTYPE).transpose(0, 2, 1).reshape(-1, self.out_channels)

    def _input_grad(self, g: np.ndarray, kernels: np.ndarray, in_shape: Shape) -> np.ndarray:
        n, c, length = in_shape
        k, s, p = self.kernel_size, self.stride, self.padding
        out_len = g.shape[0] // n
        d_cols = (g @ kernels.reshape(self.out_channels, -1)).reshape(n, out_len, c, k)
        d_xp = np.zeros((n, c, length + 2 * p), dtype=ACC_DTYPE)
        span = s * (out_len - 1) + 1
        for j in range(k):
            d_xp[:, :, j:j + span:s] += d_cols[:, :, :, j].transpose(0, 2, 1)
        return d_xp[:, :, p:p + length].astype(self.kernels.dtype)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        cols = self._columns(x)
        return self._apply(cols, self.kernels.astype(ACC_DTYPE), x.shape[0], True), (cols, x.shape)

    def backward(self, grad_out: np.ndarray, cache: Any) -> Tuple[np.ndarray, List[np.ndarray]]:
        cols, in_shape = cache
        dt = self.kernels.dtype
        g = self._flat_grad(grad_out)
        d_k = (g.T @ cols).reshape(self.kernels.shape)
        d_b = g.sum(axis=0)
        grad_in = self._input_grad(g, self.kernels.astype(ACC_DTYPE), in_shape)
        return grad_in, [d_k.astype(dt), d_b.astype(dt)]

    def forward_interval(self, mu: np.ndarray, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Any]:
        n = mu.shape[0]
        cols_mu, cols_r = self._columns(mu), self._columns(r)
        k = self.kernels.astype(ACC_DTYPE)
        out_mu = self._apply(cols_mu, k, n, True)
        out_r = self._apply(cols_r, np.abs(k), n, False)
        return out_mu, out_r, (cols_mu, cols_r, mu.shape)

    def backward_interval(
        self, grad_mu: np.ndarray, grad_r: np.ndarray, cache: Any
    ) -> Tuple[np.ndarray, np.ndarray, List[np.ndarray]]:
        cols_mu, cols_r, in_shape = cache
        dt = self.kernels.dtype
        k = self.kernels.astype(ACC_DTYPE)
        g_mu, g_r = self._flat_grad(grad_mu), self._flat_grad(grad_r)
        d_k = (g_mu.T @ cols_mu + np.sign(k).reshape(self.out_channels, -1) * (g_r.T @ cols_r))
        d_k = d_k.reshape(self.kernels.shape)
        d_b = g_mu.sum(axis=0)
        in_mu = self._input_grad(g_mu, k, in_shape)
        in_r = self._input_grad(g_r, np.abs(k), in_shape)
        return in_mu, in_r, [d_k.astype(dt), d_b.astype(dt)]


class ReLU(Layer):
    """逐元素 max(x, 0)；区间 [l, u] 映射为 [max(l,0), max(u,0)]"""

    kind = "relu"

    def output_shape(self, in_shape: Shape) -> Shape:
        return in_shape

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        mask = x > 0
        return np.where(mask, x, 0).astype(x.dtype), mask

    def backward(self, grad_out: np.ndarray, cache: Any) -> Tuple[np.ndarray, List[np.ndarray]]:
        return np.where(cache, grad_out, 0).astype(grad_out.dtype), []

    def forward_interval(self, mu: np.ndarray, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Any]:
        lower, upper = mu - r, mu + r
        lo, up = np.maximum(lower, 0), np.maximum(upper, 0)
        return (lo + up) / 2, (up - lo) / 2, (lower > 0, upper > 0)

    def backward_interval(
        self, grad_mu: np.ndarray, grad_r: np.ndarray, cache: Any
    ) -> Tuple[np.ndarray, np.ndarray, List[np.ndarray]]:
        lower_on, upper_on = cache
        g_lo = np.where(lower_on, (grad_mu - grad_r) / 2, 0)
        g_up = np.where(upper_on, (grad_mu + grad_r) / 2, 0)
        return (g_lo + g_up).astype(grad_mu.dtype), (g_up - g_lo).astype(grad_mu.dtype), []


class Flatten(Layer):
    """(N, C, L) -> (N, C*L)"""

    kind = "flatten"

    def output_shape(self, in_shape: Shape) -> Shape:
        return (int(np.prod(in_shape)),)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, grad_out: np.ndarray, cache: Any) -> Tuple[np.ndarray, List[np.ndarray]]:
        return grad_out.reshape(cache), []

    def forward_interval(self, mu: np.ndarray, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Any]:
        return mu.reshape(mu.shape[0], -1), r.reshape(r.shape[0], -1), mu.shape

    def backward_interval(
        self, grad_mu: np.ndarray, grad_r: np.ndarray, cache: Any
    ) -> Tuple[np.ndarray, np.ndarray, List[np.ndarray]]:
        return grad_mu.reshape(cache), grad_r.reshape(cache), []
