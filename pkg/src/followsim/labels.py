"""
跟随任务的真值标注规则

目标是正对操作员并保持约 1 m 距离:
- |d - 1.0| ≤ 0.15 且 |β| ≤ 10° 为 stay（边界处取 stay）
- d > 1.15 为前进族，d < 0.85 为后退族；|β| > 10° 时按 β 的符号选择左/右转变体
- 距离带内但 |β| > 10° 时，d ≥ 1.0 取前进族的转向变体，否则取后退族的转向变体
"""

import math
from dataclasses import dataclass

from src.followsim.motion import MotionClass
from src.followsim.world import RobotState, World, operator_polar


@dataclass(frozen=True)
class FollowTargets:
    target_distance: float = 1.0
    distance_tolerance: float = 0.15
    bearing_tolerance_deg: float = 10.0


DEFAULT_TARGETS = FollowTargets()


def label_from_polar(distance: float, bearing_deg: float, targets: FollowTargets = DEFAULT_TARGETS) -> MotionClass:
    near = abs(distance - targets.target_distance) <= targets.distance_tolerance
    aligned = abs(bearing_deg) <= targets.bearing_tolerance_deg
    if near and aligned:
        return MotionClass.STAY
    if near:
        forward = distance >= targets.target_distance
    else:
        forward = distance > targets.target_distance
    if forward:
        if aligned:
            return MotionClass.FORWARD
        return MotionClass.LEFT_FORWARD if bearing_deg > 0 else MotionClass.RIGHT_FORWARD
    if aligned:
        return MotionClass.BACKWARD
    return MotionClass.LEFT_BACKWARD if bearing_deg > 0 else MotionClass.RIGHT_BACKWARD


def ground_truth_label(world: World, robot: RobotState, targets: FollowTargets = DEFAULT_TARGETS) -> MotionClass:
    """按真实几何计算标签；世界中没有操作员时为 stay"""
    if world.operator is None:
        return MotionClass.STAY
    distance, bearing = operator_polar(robot, world.operator)
    return label_from_polar(distance, math.degrees(bearing), targets)
