"""
二维世界几何

世界由场地边界、墙体线段、轴对齐盒子和操作员（两只脚的圆盘）组成。
盒子与边界在渲染时统一转换为线段。
"""

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.models.scenario_models import Box, Scenario, Segment

FOOT_RADIUS = 0.06
FOOT_SEPARATION = 0.25
ROBOT_RADIUS = 0.15


def wrap_angle(theta: float) -> float:
    """角度归一化到 (-π, π]"""
    return math.pi - ((math.pi - theta) % (2 * math.pi))


@dataclass(frozen=True)
class Operator:
    """操作员：两脚中点位置与朝向"""

    x: float
    y: float
    heading: float = 0.0

    def feet(self) -> np.ndarray:
        """两只脚的圆心 (2, 2)，沿朝向的垂直方向左右分开"""
        half = FOOT_SEPARATION / 2
        nx, ny = -math.sin(self.heading), math.cos(self.heading)
        return np.array([[self.x + half * nx, self.y + half * ny], [self.x - half * nx, self.y - half * ny]])


@dataclass(frozen=True)
class RobotState:
    """差速驱动机器人（独轮车模型）状态"""

    x: float
    y: float
    theta: float
    v: float = 0.0
    omega: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(val) for val in (self.x, self.y, self.theta, self.v, self.omega)):
            raise ValueError(f"机器人状态非有限: {self}")
        object.__setattr__(self, "theta", wrap_angle(self.theta))


def box_segments(box: Box) -> List[Tuple[float, float, float, float]]:
    x0, y0, x1, y1 = box.xmin, box.ymin, box.xmax, box.ymax
    return [(x0, y0, x1, y0), (x1, y0, x1, y1), (x1, y1, x0, y1), (x0, y1, x0, y0)]


@dataclass(frozen=True)
class World:
    """场地、障碍物与操作员"""

    bounds: Optional[Tuple[float, float, float, float]] = None
    walls: Tuple[Tuple[float, float, float, float], ...] = ()
    boxes: Tuple[Box, ...] = ()
    operator: Optional[Operator] = None
    _segments: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        segs = list(self.walls)
        for b in self.boxes:
            segs.extend(box_segments(b))
        if self.bounds is not None:
            segs.extend(box_segments(Box(xmin=self.bounds[0], ymin=self.bounds[1], xmax=self.bounds[2], ymax=self.bounds[3])))
        arr = np.asarray(segs, dtype=np.float64).reshape(-1, 4)
        if not np.all(np.isfinite(arr)):
            raise ValueError("障碍物几何包含非有限值")
        object.__setattr__(self, "_segments", arr)

    @classmethod
    def from_scenario(cls, scenario: Scenario, operator: Optional[Operator] = None) -> "World":
        return cls(
            bounds=scenario.bounds,
            walls=tuple((w.x1, w.y1, w.x2, w.y2) for w in scenario.walls),
            boxes=tuple(scenario.boxes),
            operator=operator,
        )

    @classmethod
    def build(cls, bounds: Optional[Tuple[float, float, float, float]] = None,
              walls: Sequence[Segment] = (), boxes: Sequence[Box] = (),
              operator: Optional[Operator] = None) -> "World":
        return cls(bounds, tuple((w.x1, w.y1, w.x2, w.y2) for w in walls), tuple(boxes), operator)

    def with_operator(self, operator: Optional[Operator]) -> "World":
        return replace(self, operator=operator)

    @property
    def segments(self) -> np.ndarray:
        """全部线段 (m, 4)：墙、盒子边与场地边界"""
        return self._segments

    def circles(self) -> np.ndarray:
        """操作员脚的圆心 (c, 2)"""
        return self.operator.feet() if self.operator is not None else np.zeros((0, 2))

    def in_bounds(self, x: float, y: float, margin: float = 0.0) -> bool:
        if self.bounds is None:
            return True
        xmin, ymin, xmax, ymax = self.bounds
        return xmin + margin < x < xmax - margin and ymin + margin < y < ymax - margin

    def inside_box(self, x: float, y: float) -> bool:
        return any(b.xmin <= x <= b.xmax and b.ymin <= y <= b.ymax for b in self.boxes)

    def clearance(self, x: float, y: float) -> float:
        """点到最近障碍物表面（线段或脚）的距离"""
        best = float("inf")
        segs = self.segments
        if segs.size:
            best = float(point_segment_distances(np.array([x, y]), segs).min())
        feet = self.circles()
        if feet.size:
            best = min(best, float(np.hypot(feet[:, 0] - x, feet[:, 1] - y).min() - FOOT_RADIUS))
        return best

    def collides(self, x: float, y: float, radius: float = ROBOT_RADIUS) -> bool:
        """半径为 radius 的圆盘是否与任何障碍物、脚或边界接触"""
        if not self.in_bounds(x, y) or self.inside_box(x, y):
            return True
        return self.clearance(x, y) < radius


def point_segment_distances(p: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """点到每条线段的欧氏距离 (m,)"""
    a, b = segs[:, :2], segs[:, 2:]
    ab = b - a
    denom = (ab ** 2).sum(axis=1)
    t = np.where(denom > 0, ((p - a) * ab).sum(axis=1) / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.hypot(closest[:, 0] - p[0], closest[:, 1] - p[1])


def operator_polar(robot: RobotState, operator: Operator) -> Tuple[float, float]:
    """操作员中点相对机器人的 (距离, 方位角 rad)，方位角左正右负"""
    dx, dy = operator.x - robot.x, operator.y - robot.y
    return math.hypot(dx, dy), wrap_angle(math.atan2(dy, dx) - robot.theta)
