"""
前馈网络、梯度容器与反向模式求导

Network 是不可变值：训练更新通过 with_params 生成新网络。
输入统一为长度 input_dim 的向量；若首个带参层是 Conv1D，则视为单通道序列 (1, input_dim)。
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.tensorcore.layers import Conv1D, Dense, Flatten, Layer, ReLU, Shape
from src.tensorcore.losses import cross_entropy_batch
from src.tensorcore.tensor import DTYPE, Tensor, check_batch, check_finite, check_vector
from src.utils.exceptions import NonFiniteError, ShapeError

# 跟随网络默认结构: 6 个 Conv1D(+ReLU)，Flatten，2 个 Dense(+ReLU)，Dense 输出头，共 9 个带参层
FOLLOW_ARCHITECTURE: List[Dict[str, Any]] = [
    {"kind": "conv1d", "out_channels": 8, "kernel_size": 5, "stride": 2, "padding": 2},
    {"kind": "relu"},
    {"kind": "conv1d", "out_channels": 8, "kernel_size": 5, "stride": 2, "padding": 2},
    {"kind": "relu"},
    {"kind": "conv1d", "out_channels": 16, "kernel_size": 5, "stride": 2, "padding": 2},
    {"kind": "relu"},
    {"kind": "conv1d", "out_channels": 16, "kernel_size": 3, "stride": 2, "padding": 1},
    {"kind": "relu"},
    {"kind": "conv1d", "out_channels": 16, "kernel_size": 3, "stride": 2, "padding": 1},
    {"kind": "relu"},
    {"kind": "conv1d", "out_channels": 16, "kernel_size": 3, "stride": 2, "padding": 1},
    {"kind": "relu"},
    {"kind": "flatten"},
    {"kind": "dense", "out_features": 64},
    {"kind": "relu"},
    {"kind": "dense", "out_features": 32},
    {"kind": "relu"},
    {"kind": "dense", "out_features": None},
]


@dataclass(frozen=True)
class Gradient:
    """与网络参数一一对应的梯度，以及可选的输入梯度"""

    params: Tuple[np.ndarray, ...]
    input: Optional[np.ndarray] = None

    def __add__(self, other: "Gradient") -> "Gradient":
        if len(self.params) != len(other.params):
            raise ShapeError("梯度与网络参数数量不一致，无法相加")
        params = tuple(a + b for a, b in zip(self.params, other.params))
        return Gradient(params, None)

    def scaled(self, factor: float) -> "Gradient":
        return Gradient(
            tuple((p * factor).astype(p.dtype) for p in self.params),
            None if self.input is None else (self.input * factor).astype(self.input.dtype),
        )

    def check_finite(self) -> None:
        for i, p in enumerate(self.params):
            if not np.all(np.isfinite(p)):
                raise NonFiniteError(f"第 {i} 个参数梯度中包含 NaN/Inf")

    def check_congruent(self, net: "Network") -> None:
        shapes = [p.shape for p in net.params()]
        if [g.shape for g in self.params] != shapes:
            raise ShapeError("梯度形状与网络参数不一致")


class Network:
    """层序列构成的前馈网络 f_θ"""

    def __init__(self, layers: Sequence[Layer], input_dim: int, output_dim: Optional[int] = None):
        if input_dim < 1:
            raise ShapeError(f"input_dim 必须为正整数: {input_dim}")
        self.layers: Tuple[Layer, ...] = tuple(layers)
        self.input_dim = int(input_dim)
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
        if len(shape) != 1:
            raise ShapeError(f"网络最后一层输出必须是向量，实际形状 {shape}")
        if output_dim is not None and shape[0] != output_dim:
            raise ShapeError(f"网络输出维度 {shape[0]} 与 output_dim {output_dim} 不一致")
        self.output_dim = int(shape[0])

    @property
    def input_shape(self) -> Shape:
        for layer in self.layers:
            if isinstance(layer, Conv1D):
                return (1, self.input_dim)
            if isinstance(layer, Dense):
                break
        return (self.input_dim,)

    @property
    def dtype(self) -> np.dtype:
        params = self.params()
        return params[0].dtype if params else np.dtype(DTYPE)

    # ---- 参数 ----
    def params(self) -> List[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def with_params(self, params: Sequence[np.ndarray]) -> "Network":
        params = list(params)
        if len(params) != len(self.params()):
            raise ShapeError("参数数量与网络结构不一致")
        layers, pos = [], 0
        for layer in self.layers:
            count = len(layer.params())
            layers.append(layer.with_params(params[pos:pos + count]))
            pos += count
        return Network(layers, self.input_dim, self.output_dim)

    def astype(self, dtype: Any) -> "Network":
        """返回参数转换为指定精度的副本（float64 用作数值校验参考）"""
        return self.with_params([p.astype(dtype) for p in self.params()])

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params()))

    # ---- 前向 / 反向 ----
    def _prepare(self, x: np.ndarray) -> np.ndarray:
        x = check_batch(x, self.input_dim).astype(self.dtype, copy=False)
        return x.reshape((x.shape[0],) + self.input_shape)

    def forward_with_cache(self, x: np.ndarray) -> Tuple[np.ndarray, List[Any]]:
        """批量前向，返回 (logits (N, C), 每层缓存)"""
        h = self._prepare(x)
        caches = []
        for layer in self.layers:
            h, cache = layer.forward(h)
            caches.append(cache)
        return h, caches

    def backward_from(self, grad_logits: np.ndarray, caches: List[Any]) -> Gradient:
        """从 logits 梯度出发做反向模式求导，返回参数梯度与输入梯度 (N, input_dim)"""
        g = np.asarray(grad_logits).astype(self.dtype)
        grads: List[List[np.ndarray]] = []
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            g, layer_grads = layer.backward(g, cache)
            grads.append(layer_grads)
        flat = [p for layer_grads in reversed(grads) for p in layer_grads]
        return Gradient(tuple(flat), g.reshape(g.shape[0], self.input_dim))

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        logits, _ = self.forward_with_cache(x)
        return logits

    def predict(self, x: np.ndarray) -> np.ndarray:
        """批量 argmax 类别"""
        return self.forward_batch(x).argmax(axis=1)

    # ---- 区间传播 ----
    def forward_interval(self, mu: np.ndarray, radius: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[Any]]:
        """中心-半径形式的区间前向，返回输出层 (中心, 半径, 缓存)"""
        m, r = self._prepare(mu), self._prepare(radius)
        caches = []
        for layer in self.layers:
            m, r, cache = layer.forward_interval(m, r)
            caches.append(cache)
        return m, r, caches

    def backward_interval(self, grad_mu: np.ndarray, grad_r: np.ndarray, caches: List[Any]) -> Gradient:
        g_mu, g_r = grad_mu.astype(self.dtype), grad_r.astype(self.dtype)
        grads: List[List[np.ndarray]] = []
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            g_mu, g_r, layer_grads = layer.backward_interval(g_mu, g_r, cache)
            grads.append(layer_grads)
        flat = [p for layer_grads in reversed(grads) for p in layer_grads]
        return Gradient(tuple(flat), None)


def forward(net: Network, x: np.ndarray) -> Tensor:
    """单样本前向，返回长度 output_dim 的 logits"""
    x = check_vector(x, net.input_dim)
    logits = net.forward_batch(x.reshape(1, -1))[0]
    check_finite(logits, "logits")
    return logits


def loss_and_grad(net: Network, x: np.ndarray, labels: Sequence[int]) -> Tuple[float, Gradient]:
    """
    批量平均交叉熵及其梯度

    Args:
        net: 网络
        x: (N, input_dim) 输入批
        labels: 长度 N 的标签

    Returns:
        (平均损失, 梯度；输入梯度为对各样本输入的梯度 (N, input_dim))
    """
    logits, caches = net.forward_with_cache(x)
    losses, g_logits = cross_entropy_batch(logits, labels)
    n = logits.shape[0]
    grad = net.backward_from(g_logits / n, caches)
    loss = float(losses.mean())
    if not np.isfinite(loss):
        raise NonFiniteError("损失为非有限值")
    return loss, grad


def backward(net: Network, x: np.ndarray, y: int) -> Tuple[float, Gradient]:
    """单样本损失与精确反向梯度（参数梯度 + 对 x 的梯度）"""
    x = check_vector(x, net.input_dim)
    loss, grad = loss_and_grad(net, x.reshape(1, -1), [int(y)])
    return loss, Gradient(grad.params, grad.input[0])


def _glorot(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(DTYPE)


def build_network(
    architecture: Sequence[Dict[str, Any]], input_dim: int, output_dim: int, seed: int = 0
) -> Network:
    """
    按结构描述构建并初始化网络（Glorot 均匀初始化，偏置为 0）

    Args:
        architecture: 层描述列表，dense 的 out_features 为 None 表示输出头
        input_dim: 输入维度
        output_dim: 类别数
        seed: 初始化种子
    """
    rng = np.random.default_rng(seed)
    layers: List[Layer] = []
    first = next((a["kind"] for a in architecture if a["kind"] in ("conv1d", "dense")), None)
    shape: Shape = (1, input_dim) if first == "conv1d" else (input_dim,)
    for entry in architecture:
        kind = entry["kind"]
        if kind == "conv1d":
            out_c, k = int(entry["out_channels"]), int(entry["kernel_size"])
            in_c = shape[0]
            kernels = _glorot(rng, (out_c, in_c, k), in_c * k, out_c * k)
            layer: Layer = Conv1D(kernels, np.zeros(out_c, dtype=DTYPE),
                                  int(entry.get("stride", 1)), int(entry.get("padding", 0)))
        elif kind == "dense":
            out_f = entry.get("out_features") or output_dim
            in_f = shape[0]
            layer = Dense(_glorot(rng, (out_f, in_f), in_f, out_f), np.zeros(out_f, dtype=DTYPE))
        elif kind == "relu":
            layer = ReLU()
        elif kind == "flatten":
            layer = Flatten()
        else:
            raise ShapeError(f"未知的层类型: {kind}")
        shape = layer.output_shape(shape)
        layers.append(layer)
    return Network(layers, input_dim, output_dim)


def mlp(sizes: Sequence[int], seed: int = 0) -> Network:
    """全连接 ReLU 网络，sizes = [input_dim, hidden..., output_dim]"""
    arch: List[Dict[str, Any]] = []
    for i, size in enumerate(sizes[1:]):
        arch.append({"kind": "dense", "out_features": size})
        if i < len(sizes) - 2:
            arch.append({"kind": "relu"})
    return build_network(arch, sizes[0], sizes[-1], seed)


def follow_network(seed: int = 0, input_dim: int = 541, num_classes: int = 7) -> Network:
    """默认的 9 层一维卷积跟随网络"""
    return build_network(FOLLOW_ARCHITECTURE, input_dim, num_classes, seed)
