"""
541 线二维激光雷达渲染

射线 j (j = 0..540) 的角度为 θ - 135° + 0.5°·j，覆盖以机器人朝向为中心的 270° 视场。
每条射线取与线段、脚圆盘交点中的最近距离，并截断到 R_MAX。
"""

import math
from typing import Optional

import numpy as np

from src.followsim.world import FOOT_RADIUS, RobotState, World
from src.utils.exceptions import ScenarioError

NUM_RAYS = 541
FIELD_OF_VIEW_DEG = 270.0
RESOLUTION_DEG = 0.5
R_MAX = 5.0
_MIN_RANGE = 1e-3


def ray_angles(theta: float) -> np.ndarray:
    """世界坐标系下每条射线的角度 (541,)"""
    offsets = np.deg2rad(-FIELD_OF_VIEW_DEG / 2 + RESOLUTION_DEG * np.arange(NUM_RAYS))
    return theta + offsets


def bearing_to_index(bearing: float) -> float:
    """相对朝向的方位角 (rad) 对应的连续射线序号"""
    return (math.degrees(bearing) + FIELD_OF_VIEW_DEG / 2) / RESOLUTION_DEG


def _segment_hits(origin: np.ndarray, dirs: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """(rays, segs) 射线参数 t，无交点为 inf"""
    if segs.size == 0:
        return np.full((dirs.shape[0], 0), np.inf)
    a = segs[None, :, :2]
    e = segs[None, :, 2:] - segs[None, :, :2]
    d = dirs[:, None, :]
    w = a - origin
    denom = d[..., 0] * e[..., 1] - d[..., 1] * e[..., 0]
    safe = np.where(np.abs(denom) > 1e-12, denom, np.nan)
    t = (w[..., 0] * e[..., 1] - w[..., 1] * e[..., 0]) / safe
    s = (w[..., 0] * d[..., 1] - w[..., 1] * d[..., 0]) / safe
    valid = (t > 0) & (s >= 0) & (s <= 1)
    return np.where(valid, t, np.inf)


def _circle_hits(origin: np.ndarray, dirs: np.ndarray, centers: np.ndarray, radius: float) -> np.ndarray:
    if centers.size == 0:
        return np.full((dirs.shape[0], 0), np.inf)
    f = origin - centers  # (c, 2)
    b = dirs @ f.T  # (rays, c)
    c = (f ** 2).sum(axis=1) - radius ** 2
    disc = b ** 2 - c[None, :]
    root = np.sqrt(np.where(disc >= 0, disc, np.nan))
    t = -b - root
    valid = (disc >= 0) & (t > 0)
    return np.where(valid, t, np.inf)


def render_scan(
    world: World,
    robot: RobotState,
    noise_std: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    渲染激光扫描

    Args:
        world: 世界
        robot: 机器人位姿
        noise_std: 可选的高斯测距噪声标准差 (m)
        rng: 噪声随机源

    Returns:
        np.ndarray: (541,) float32，每个值在 (0, R_MAX]

    Raises:
        ScenarioError: 机器人位于场地外或障碍物内部
    """
    if not world.in_bounds(robot.x, robot.y):
        raise ScenarioError(f"机器人位于场地之外: ({robot.x:.3f}, {robot.y:.3f})")
    if world.inside_box(robot.x, robot.y) or world.clearance(robot.x, robot.y) <= 0:
        raise ScenarioError(f"机器人位于障碍物内部: ({robot.x:.3f}, {robot.y:.3f})")
    origin = np.array([robot.x, robot.y])
    angles = ray_angles(robot.theta)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    with np.errstate(invalid="ignore"):
        hits = np.concatenate(
            [_segment_hits(origin, dirs, world.segments), _circle_hits(origin, dirs, world.circles(), FOOT_RADIUS)],
            axis=1,
        )
    ranges = np.minimum(hits.min(axis=1) if hits.shape[1] else np.full(NUM_RAYS, np.inf), R_MAX)
    if noise_std > 0:
        rng = rng or np.random.default_rng()
        ranges = np.clip(ranges + rng.normal(0.0, noise_std, size=NUM_RAYS), _MIN_RANGE, R_MAX)
    return ranges.astype(np.float32)
