"""
跟随网络的分级安全域

每个等级对中心射线 i ∈ {150, ..., 389} 各生成一个盒子（共 240 个），下界全为 0:
- 等级 0: 空
- 等级 1: 射线 i-1, i, i+1 ≤ 0.2 m，其余 ≤ 3 m
- 等级 2: 射线 i ≤ 0.2 m，其余 ≤ 3 m
- 等级 3: 射线 i ≤ 0.2 m，其余 ≤ 4 m
可接受标签为全部非前进类别。高等级的盒子包含同一 i 的低等级盒子。
"""

from typing import Dict, List, Tuple

import numpy as np

from src.certify.interval import BoxDomain, SafetyDomain
from src.followsim.lidar import NUM_RAYS
from src.followsim.motion import NON_FORWARD
from src.utils.exceptions import DomainError

CENTER_INDICES = range(150, 390)
NEAR_LIMIT = 0.2

# 等级 -> (中心附近被限制的射线偏移, 其余射线上界)
LEVELS: Dict[int, Tuple[Tuple[int, ...], float]] = {
    1: ((-1, 0, 1), 3.0),
    2: ((0,), 3.0),
    3: ((0,), 4.0),
}


def domain_upper(level: int, center: int) -> np.ndarray:
    offsets, far = LEVELS[level]
    upper = np.full(NUM_RAYS, far, dtype=np.float32)
    upper[[center + o for o in offsets]] = NEAR_LIMIT
    return upper


def gen_domains(level: int) -> List[SafetyDomain]:
    """
    生成指定安全等级的安全域

    Args:
        level: 0-3

    Returns:
        List[SafetyDomain]: 等级 0 为空列表，其余 240 个
    """
    if level == 0:
        return []
    if level not in LEVELS:
        raise DomainError(f"安全等级必须是 0-3: {level}")
    lower = np.zeros(NUM_RAYS, dtype=np.float32)
    acceptable = frozenset(NON_FORWARD)
    return [SafetyDomain(BoxDomain(lower, domain_upper(level, i)), acceptable) for i in CENTER_INDICES]


def inside_level(scans: np.ndarray, level: int) -> np.ndarray:
    """
    扫描是否落在该等级任一安全域内 (n,)

    扫描值恒为正，下界 0 自动满足；只需比较上界。
    """
    scans = np.atleast_2d(np.asarray(scans, dtype=np.float32))
    if level == 0:
        return np.zeros(scans.shape[0], dtype=bool)
    if level not in LEVELS:
        raise DomainError(f"安全等级必须是 0-3: {level}")
    offsets, far = LEVELS[level]
    centers = np.asarray(CENTER_INDICES)
    near_ok = np.ones((scans.shape[0], centers.size), dtype=bool)
    for o in offsets:
        near_ok &= scans[:, centers + o] <= NEAR_LIMIT
    restricted = np.zeros(NUM_RAYS, dtype=bool)
    result = np.zeros(scans.shape[0], dtype=bool)
    for col, c in enumerate(centers):
        if not near_ok[:, col].any():
            continue
        restricted[:] = True
        restricted[[c + o for o in offsets]] = False
        far_ok = np.all(scans[:, restricted] <= far, axis=1)
        result |= near_ok[:, col] & far_ok
    return result
