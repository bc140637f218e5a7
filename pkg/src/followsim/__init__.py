"""
跟随任务仿真：二维世界、激光雷达、运动学、真值标注、数据集与安全域生成、闭环场景评估

绘图函数位于 src.followsim.plotting，按需导入。
"""

from .dataset import DEFAULT_TRAIN, DEFAULT_VAL, gen_dataset
from .domains import gen_domains, inside_level
from .labels import ground_truth_label, label_from_polar
from .lidar import NUM_RAYS, R_MAX, render_scan
from .motion import NUM_CLASSES, MotionClass, integrate
from .scenario import (
    evaluate_scenarios,
    load_scenario,
    network_controller,
    oracle_controller,
    run_scenario,
    save_trajectory_csv,
    standard_scenarios,
)
from .state_machine import ControllerState, Event, step_state_machine
from .world import Operator, RobotState, World

__all__ = [
    "DEFAULT_TRAIN",
    "DEFAULT_VAL",
    "gen_dataset",
    "gen_domains",
    "inside_level",
    "ground_truth_label",
    "label_from_polar",
    "NUM_RAYS",
    "R_MAX",
    "render_scan",
    "NUM_CLASSES",
    "MotionClass",
    "integrate",
    "evaluate_scenarios",
    "load_scenario",
    "network_controller",
    "oracle_controller",
    "run_scenario",
    "save_trajectory_csv",
    "standard_scenarios",
    "ControllerState",
    "Event",
    "step_state_machine",
    "Operator",
    "RobotState",
    "World",
]
