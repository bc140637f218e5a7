"""
7 类运动指令与独轮车运动学
"""

import math
from enum import IntEnum
from typing import Dict, FrozenSet, Tuple

from src.followsim.world import RobotState


class MotionClass(IntEnum):
    STAY = 0
    FORWARD = 1
    LEFT_FORWARD = 2
    RIGHT_FORWARD = 3
    BACKWARD = 4
    LEFT_BACKWARD = 5
    RIGHT_BACKWARD = 6

    @property
    def label(self) -> str:
        return self.name.lower()


NUM_CLASSES = len(MotionClass)

# (v m/s, ω rad/s)
PRIMITIVES: Dict[MotionClass, Tuple[float, float]] = {
    MotionClass.STAY: (0.0, 0.0),
    MotionClass.FORWARD: (0.4, 0.0),
    MotionClass.LEFT_FORWARD: (0.3, 0.8),
    MotionClass.RIGHT_FORWARD: (0.3, -0.8),
    MotionClass.BACKWARD: (-0.3, 0.0),
    MotionClass.LEFT_BACKWARD: (-0.2, 0.8),
    MotionClass.RIGHT_BACKWARD: (-0.2, -0.8),
}

FORWARD_FAMILY: FrozenSet[int] = frozenset({MotionClass.FORWARD, MotionClass.LEFT_FORWARD, MotionClass.RIGHT_FORWARD})
NON_FORWARD: FrozenSet[int] = frozenset(int(c) for c in MotionClass if c not in FORWARD_FAMILY)


def integrate(state: RobotState, motion: MotionClass, dt: float) -> RobotState:
    """以指令的 (v, ω) 精确积分独轮车运动 dt 秒"""
    v, omega = PRIMITIVES[MotionClass(motion)]
    x, y, th = state.x, state.y, state.theta
    if abs(omega) < 1e-12:
        x += v * math.cos(th) * dt
        y += v * math.sin(th) * dt
    else:
        x += v / omega * (math.sin(th + omega * dt) - math.sin(th))
        y -= v / omega * (math.cos(th + omega * dt) - math.cos(th))
    return RobotState(x, y, th + omega * dt, v, omega)
