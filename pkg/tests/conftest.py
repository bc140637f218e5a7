"""
公共测试夹具
"""

import os

# 必须在导入 src 之前设置，settings 在首次导入时读取环境变量
os.environ.setdefault("SDTRAIN_LOG_TO_FILE", "false")
os.environ.setdefault("SDTRAIN_LOG_LEVEL", "WARNING")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from src.tensorcore import Dataset, build_network, mlp  # noqa: E402

SMALL_CONV = [
    {"kind": "conv1d", "out_channels": 3, "kernel_size": 3, "stride": 2, "padding": 1},
    {"kind": "relu"},
    {"kind": "conv1d", "out_channels": 4, "kernel_size": 3, "stride": 1, "padding": 0},
    {"kind": "relu"},
    {"kind": "flatten"},
    {"kind": "dense", "out_features": 6},
    {"kind": "relu"},
    {"kind": "dense", "out_features": None},
]


def two_clusters(n_per_class: int = 40, seed: int = 0, std: float = 0.3) -> Dataset:
    """二维两类数据: 类 0 围绕 (-1,-1)，类 1 围绕 (1,1)"""
    rng = np.random.default_rng(seed)
    x0 = rng.normal(-1.0, std, size=(n_per_class, 2))
    x1 = rng.normal(1.0, std, size=(n_per_class, 2))
    x = np.concatenate([x0, x1])
    y = np.array([0] * n_per_class + [1] * n_per_class)
    return Dataset(x, y, 2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def toy_dataset() -> Dataset:
    return two_clusters()


@pytest.fixture
def toy_net():
    return mlp([2, 16, 2], seed=3)


@pytest.fixture
def conv_net():
    return build_network(SMALL_CONV, 12, 3, seed=5)


def with_random_biases(net, seed: int, scale: float = 0.5):
    """偏置换成随机值，避免预激活恰好落在 ReLU 的折点上"""
    rng = np.random.default_rng(seed)
    return net.with_params([
        p if p.ndim > 1 else rng.normal(0.0, scale, size=p.shape).astype(p.dtype) for p in net.params()
    ])
