"""
优化器

sgd_step 是纯函数 θ' = θ - α∇；MomentumSGD 在其上维护速度状态，momentum=0 时与 sgd_step 逐位一致。
"""

from typing import List, Optional

import numpy as np

from src.tensorcore.network import Gradient, Network
from src.tensorcore.tensor import ACC_DTYPE
from src.utils.exceptions import NonFiniteError


def sgd_step(net: Network, grad: Gradient, lr: float) -> Network:
    """
    单步随机梯度下降

    Args:
        net: 当前网络
        grad: 与网络同构的梯度
        lr: 学习率 α

    Returns:
        Network: 更新后的新网络（原网络不变）
    """
    grad.check_congruent(net)
    grad.check_finite()
    if not np.isfinite(lr):
        raise NonFiniteError(f"学习率非有限: {lr}")
    params = [
        (p.astype(ACC_DTYPE) - lr * g.astype(ACC_DTYPE)).astype(p.dtype)
        for p, g in zip(net.params(), grad.params)
    ]
    return net.with_params(params)


class MomentumSGD:
    """带动量的 SGD：v = μv + ∇，θ = θ - αv"""

    def __init__(self, lr: float, momentum: float = 0.0):
        self.lr = lr
        self.momentum = momentum
        self._velocity: Optional[List[np.ndarray]] = None

    def step(self, net: Network, grad: Gradient) -> Network:
        if self.momentum == 0.0:
            return sgd_step(net, grad, self.lr)
        grad.check_congruent(net)
        grad.check_finite()
        if self._velocity is None:
            self._velocity = [np.zeros_like(g, dtype=ACC_DTYPE) for g in grad.params]
        self._velocity = [self.momentum * v + g.astype(ACC_DTYPE) for v, g in zip(self._velocity, grad.params)]
        return sgd_step(net, Gradient(tuple(v.astype(g.dtype) for v, g in zip(self._velocity, grad.params))), self.lr)
