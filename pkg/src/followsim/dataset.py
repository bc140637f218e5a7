"""
跟随任务数据集生成

随机采样场地、障碍物、机器人位姿与操作员位置，渲染扫描并按真值规则标注。
前进类样本若落在等级 3（所有等级的超集）安全域内则拒绝，保证数据与安全域不冲突。
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.followsim.domains import inside_level
from src.followsim.labels import DEFAULT_TARGETS, ground_truth_label
from src.followsim.lidar import NUM_RAYS, render_scan
from src.followsim.motion import FORWARD_FAMILY, NUM_CLASSES
from src.followsim.world import FOOT_RADIUS, FOOT_SEPARATION, Operator, RobotState, World
from src.models.scenario_models import Box, WorldSamplerConfig
from src.tensorcore.data import Dataset
from src.utils.exceptions import ConflictError
from src.utils.helpers import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_TRAIN = 2705
DEFAULT_VAL = 570
_MAX_ATTEMPTS_PER_SAMPLE = 200
_OPERATOR_CLEARANCE = FOOT_SEPARATION / 2 + FOOT_RADIUS + 0.05


def _random_box(rng: np.random.Generator, bounds: Tuple[float, float, float, float]) -> Box:
    w, h = rng.uniform(0.2, 1.0, size=2)
    cx = rng.uniform(bounds[0], bounds[2])
    cy = rng.uniform(bounds[1], bounds[3])
    return Box(xmin=cx - w / 2, ymin=cy - h / 2, xmax=cx + w / 2, ymax=cy + h / 2)


def _random_wall(rng: np.random.Generator, bounds: Tuple[float, float, float, float]) -> Tuple[float, float, float, float]:
    cx = rng.uniform(bounds[0], bounds[2])
    cy = rng.uniform(bounds[1], bounds[3])
    length, angle = rng.uniform(0.5, 2.5), rng.uniform(0.0, math.pi)
    dx, dy = length / 2 * math.cos(angle), length / 2 * math.sin(angle)
    return (cx - dx, cy - dy, cx + dx, cy + dy)


def sample_configuration(rng: np.random.Generator, cfg: WorldSamplerConfig) -> Optional[Tuple[World, RobotState]]:
    """
    采样一个 (世界, 机器人) 配置；不满足间隙约束时返回 None

    Args:
        rng: 随机源
        cfg: 采样配置

    Returns:
        配置或 None（由调用方重采样）
    """
    ax, ay = rng.uniform(cfg.arena_half_min, cfg.arena_half_max, size=2)
    bounds = (-float(ax), -float(ay), float(ax), float(ay))
    margin = cfg.clearance
    robot = RobotState(
        float(rng.uniform(bounds[0] + margin, bounds[2] - margin)),
        float(rng.uniform(bounds[1] + margin, bounds[3] - margin)),
        float(rng.uniform(-math.pi, math.pi)),
    )
    if rng.random() < cfg.stay_fraction:
        t = DEFAULT_TARGETS
        distance = rng.uniform(t.target_distance - t.distance_tolerance, t.target_distance + t.distance_tolerance)
        bearing = math.radians(rng.uniform(-t.bearing_tolerance_deg, t.bearing_tolerance_deg))
    else:
        distance = rng.uniform(*cfg.distance_range)
        bearing = math.radians(rng.uniform(-cfg.bearing_max_deg, cfg.bearing_max_deg))
    ox = robot.x + distance * math.cos(robot.theta + bearing)
    oy = robot.y + distance * math.sin(robot.theta + bearing)
    facing = math.atan2(robot.y - oy, robot.x - ox) + rng.normal(0.0, 0.5)
    operator = Operator(ox, oy, facing)

    boxes = tuple(_random_box(rng, bounds) for _ in range(int(rng.integers(0, cfg.max_boxes + 1))))
    walls = tuple(_random_wall(rng, bounds) for _ in range(int(rng.integers(0, cfg.max_walls + 1))))
    world = World(bounds=bounds, walls=walls, boxes=boxes)

    if not world.in_bounds(ox, oy, _OPERATOR_CLEARANCE) or world.inside_box(ox, oy):
        return None
    if world.clearance(ox, oy) < _OPERATOR_CLEARANCE:
        return None
    world = world.with_operator(operator)
    if world.inside_box(robot.x, robot.y) or world.clearance(robot.x, robot.y) < cfg.clearance:
        return None
    return world, robot


def generate_samples(rng: np.random.Generator, n: int, cfg: WorldSamplerConfig, desc: str = "生成样本") -> Dataset:
    """生成 n 个带标签的扫描"""
    x = np.empty((n, NUM_RAYS), dtype=np.float32)
    y = np.empty(n, dtype=np.int64)
    rejected = 0
    filled = 0
    with tqdm(total=n, desc=desc, unit="样本") as bar:
        while filled < n:
            if rejected > _MAX_ATTEMPTS_PER_SAMPLE * n:
                raise RuntimeError(f"采样拒绝次数过多 ({rejected})，请检查 WorldSamplerConfig")
            config = sample_configuration(rng, cfg)
            if config is None:
                rejected += 1
                continue
            world, robot = config
            scan = render_scan(world, robot, cfg.noise_std, rng)
            label = int(ground_truth_label(world, robot))
            if label in FORWARD_FAMILY and bool(inside_level(scan[None, :], 3)[0]):
                rejected += 1
                continue
            x[filled], y[filled] = scan, label
            filled += 1
            bar.update(1)
    logger.debug(f"{desc}: {n} 个样本，拒绝 {rejected} 次")
    return Dataset(x, y, NUM_CLASSES)


def assert_non_conflicting(dataset: Dataset) -> None:
    """前进类样本不得落在任何等级的安全域内；等级 3 是其余等级的超集"""
    forward = np.isin(dataset.y, sorted(FORWARD_FAMILY))
    if not forward.any():
        return
    idx = np.flatnonzero(forward)
    inside = inside_level(dataset.x[idx], 3)
    if inside.any():
        i = int(idx[np.flatnonzero(inside)[0]])
        raise ConflictError(i, -1, int(dataset.y[i]))


def gen_dataset(
    seed: int,
    n_train: int = DEFAULT_TRAIN,
    n_val: int = DEFAULT_VAL,
    sampler: Optional[WorldSamplerConfig] = None,
) -> Tuple[Dataset, Dataset]:
    """
    生成训练集与验证集

    Args:
        seed: 主随机种子，训练/验证使用各自派生的子种子
        n_train: 训练样本数 (≥ 1)
        n_val: 验证样本数 (≥ 1)
        sampler: 世界采样配置

    Returns:
        (训练集, 验证集)
    """
    if n_train < 1 or n_val < 1:
        raise ValueError(f"样本数必须 ≥ 1: n_train={n_train}, n_val={n_val}")
    cfg = sampler or WorldSamplerConfig()
    train = generate_samples(np.random.default_rng(derive_seed(seed, "train")), n_train, cfg, "生成训练集")
    val = generate_samples(np.random.default_rng(derive_seed(seed, "val")), n_val, cfg, "生成验证集")
    assert_non_conflicting(train)
    assert_non_conflicting(val)
    return train, val
