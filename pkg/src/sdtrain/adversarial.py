"""
对抗训练作为安全域训练的特例

以每个训练样本为中心构造 l_inf ε 球，可接受集合为 {y_i}；
配合经验内层最大化（单步、中心起点）即 FGSM 对抗训练。
"""

from typing import List, Optional, Tuple

import numpy as np

from src.certify.interval import BoxDomain, SafetyDomain
from src.models.train_models import TrainConfig
from src.tensorcore.data import Dataset
from src.utils.exceptions import DomainError


def eps_ball_domains(dataset: Dataset, epsilon: float, clamp: Optional[Tuple[float, float]] = None) -> List[SafetyDomain]:
    """
    每个样本一个 ε 球安全域

    Args:
        dataset: 训练集
        epsilon: 球半径（输入单位）
        clamp: 全局取值范围，给出时与球求交

    Returns:
        List[SafetyDomain]: 与样本一一对应的安全域
    """
    if epsilon < 0:
        raise DomainError(f"ε 必须非负: {epsilon}")
    x = dataset.x.astype(np.float64)
    lower, upper = x - epsilon, x + epsilon
    if clamp is not None:
        lower, upper = np.maximum(lower, clamp[0]), np.minimum(upper, clamp[1])
    return [
        SafetyDomain(BoxDomain(lo, up), frozenset([int(y)]))
        for lo, up, y in zip(lower, upper, dataset.y)
    ]


def fgsm_training_config(base: TrainConfig, epsilon: float, clamp: Optional[Tuple[float, float]] = None) -> TrainConfig:
    """把训练配置改写为 FGSM 对抗训练：经验模式、单步、无随机起点"""
    attack = base.attack.model_copy(update={
        "epsilon": epsilon, "steps": 1, "random_init": False, "step_size": None, "clamp": clamp,
    })
    return base.model_copy(update={"inner_mode": "empirical", "attack": attack})
