"""
高层控制器状态机：idle 与 active 两个状态，由手势命令切换
"""

from enum import Enum


class ControllerState(str, Enum):
    IDLE = "idle"
    ACTIVE = "active"


class Event(str, Enum):
    ENABLE = "enable"
    DISABLE = "disable"
    NONE = "none"


def step_state_machine(state: ControllerState, event: Event) -> ControllerState:
    state, event = ControllerState(state), Event(event)
    if state is ControllerState.IDLE and event is Event.ENABLE:
        return ControllerState.ACTIVE
    if state is ControllerState.ACTIVE and event is Event.DISABLE:
        return ControllerState.IDLE
    return state
