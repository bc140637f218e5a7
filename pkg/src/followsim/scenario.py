"""
闭环场景评估

每个时间步: 操作员沿路径点移动；处理脚本化的使能/禁用命令；若处于 active 状态，
渲染扫描、由控制器分类并执行对应 (v, ω)，否则原地不动；检查碰撞。
场景结束时机器人距操作员 [d_min, d_max] 且 |β| ≤ bearing_max 且全程无碰撞即为成功。
"""

import asyncio
import io
import json
import logging
import math
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError
from tqdm import tqdm

from src.config.settings import settings
from src.followsim.labels import ground_truth_label
from src.followsim.lidar import NUM_RAYS, render_scan
from src.followsim.motion import FORWARD_FAMILY, NUM_CLASSES, MotionClass, integrate
from src.followsim.state_machine import ControllerState, Event, step_state_machine
from src.followsim.world import Operator, RobotState, World, operator_polar
from src.models.scenario_models import Scenario, ScenarioResult, TrajectoryPoint
from src.tensorcore.network import Network, forward
from src.utils.exceptions import ScenarioError, ShapeError
from src.utils.helpers import derive_seed, write_text_atomic

logger = logging.getLogger(__name__)

Controller = Callable[[np.ndarray, World, RobotState], MotionClass]

SCENARIO_DIR = Path(__file__).parent / "scenarios"
STANDARD_NAMES = (
    "plain",
    "around_boxes",
    "out_of_corner",
    "through_gate",
    "around_table",
    "garage_parking",
    "narrow_hallway",
)


def load_scenario(path: Union[str, Path]) -> Scenario:
    """读取场景 JSON；格式错误抛出 ScenarioError"""
    try:
        return Scenario.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise ScenarioError(f"场景文件不是合法 JSON: {path} - {e}") from e
    except ValidationError as e:
        raise ScenarioError(f"场景文件结构错误: {path} - {e}") from e


def standard_scenarios() -> List[Scenario]:
    """七个标准场景，按固定顺序"""
    return [load_scenario(SCENARIO_DIR / f"{name}.json") for name in STANDARD_NAMES]


def operator_at(scenario: Scenario, t: float) -> Operator:
    """
    t 时刻操作员的位置与朝向

    路径点之间线性插值，最后一个路径点之后原地停留；朝向为运动方向，
    静止时保持上一段的运动方向，尚未运动时面向机器人初始位置。
    """
    wps = scenario.operator_waypoints
    start = scenario.robot_start
    heading = math.atan2(start.y - wps[0].y, start.x - wps[0].x)
    if t <= wps[0].t:
        return Operator(wps[0].x, wps[0].y, heading)
    for a, b in zip(wps, wps[1:]):
        moving = (b.x, b.y) != (a.x, a.y)
        if moving:
            heading = math.atan2(b.y - a.y, b.x - a.x)
        if t <= b.t:
            frac = 1.0 if b.t == a.t else (t - a.t) / (b.t - a.t)
            return Operator(a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y), heading)
    last = wps[-1]
    return Operator(last.x, last.y, heading)


def network_controller(net: Network) -> Controller:
    """以网络 argmax 作为控制器"""
    if net.input_dim != NUM_RAYS or net.output_dim != NUM_CLASSES:
        raise ShapeError(f"跟随网络维度必须是 {NUM_RAYS}→{NUM_CLASSES}，实际 {net.input_dim}→{net.output_dim}")

    def control(scan: np.ndarray, world: World, robot: RobotState) -> MotionClass:
        return MotionClass(int(np.argmax(forward(net, scan))))

    return control


def oracle_controller(scan: np.ndarray, world: World, robot: RobotState) -> MotionClass:
    """以真值标注规则作为控制器"""
    return ground_truth_label(world, robot)


def _as_controller(policy: Union[Network, Controller]) -> Controller:
    return network_controller(policy) if isinstance(policy, Network) else policy


def run_scenario(
    policy: Union[Network, Controller],
    scenario: Scenario,
    dt: float = 0.1,
    noise_std: float = 0.0,
    seed: int = 0,
) -> ScenarioResult:
    """
    闭环运行单个场景

    Args:
        policy: 跟随网络 (541→7) 或控制器函数
        scenario: 场景
        dt: 时间步长 (s)
        noise_std: 测距噪声标准差
        seed: 噪声随机种子

    Returns:
        ScenarioResult: 结果与轨迹
    """
    controller = _as_controller(policy)
    rng = np.random.default_rng(seed)
    base = World.from_scenario(scenario)
    p = scenario.robot_start
    robot = RobotState(p.x, p.y, p.theta)
    if base.with_operator(operator_at(scenario, 0.0)).collides(robot.x, robot.y):
        raise ScenarioError(f"场景 {scenario.name}: 机器人初始位姿与障碍物重叠")

    events = sorted(scenario.events, key=lambda e: e.t)
    next_event = 0
    mode = ControllerState(scenario.initial_mode)
    label = MotionClass.STAY
    steps = int(round(scenario.duration / dt))
    trajectory: List[TrajectoryPoint] = [TrajectoryPoint(t=0.0, x=robot.x, y=robot.y, theta=robot.theta,
                                                         mode=mode.value, label=label.label)]
    collision_time: Optional[float] = None

    for k in range(steps):
        t = k * dt
        while next_event < len(events) and events[next_event].t <= t + 1e-9:
            mode = step_state_machine(mode, Event(events[next_event].kind))
            next_event += 1
        world = base.with_operator(operator_at(scenario, t))
        if mode is ControllerState.ACTIVE:
            scan = render_scan(world, robot, noise_std, rng)
            label = controller(scan, world, robot)
        else:
            label = MotionClass.STAY
        robot = integrate(robot, label, dt)
        t_next = (k + 1) * dt
        trajectory.append(TrajectoryPoint(t=round(t_next, 6), x=robot.x, y=robot.y, theta=robot.theta,
                                          mode=mode.value, label=label.label))
        if base.with_operator(operator_at(scenario, t_next)).collides(robot.x, robot.y):
            collision_time = t_next
            break

    final_op = operator_at(scenario, trajectory[-1].t)
    distance, bearing = operator_polar(robot, final_op)
    bearing_deg = math.degrees(bearing)
    crit = scenario.success
    result = ScenarioResult(
        scenario_id=scenario.id,
        name=scenario.name,
        success=False,
        collision=collision_time is not None,
        final_distance=distance,
        final_bearing_deg=bearing_deg,
        trajectory=trajectory,
    )
    if collision_time is not None:
        reason, fail_t = "collision", collision_time
    elif not crit.d_min <= distance <= crit.d_max:
        reason, fail_t = "final_distance", trajectory[-1].t
    elif abs(bearing_deg) > crit.bearing_max_deg:
        reason, fail_t = "final_bearing", trajectory[-1].t
    else:
        result.success = True
        return result
    result.failure_reason = reason  # type: ignore[assignment]
    result.failure_time = fail_t
    result.label_at_failure = label.label
    result.forward_at_failure = int(label) in FORWARD_FAMILY
    return result


async def evaluate_scenarios(
    policy: Union[Network, Controller],
    scenarios: Sequence[Scenario],
    dt: float = 0.1,
    threads: Optional[int] = None,
    desc: str = "场景评估",
    noise_std: float = 0.0,
    seed: int = 0,
) -> List[ScenarioResult]:
    """
    并发评估多个场景，结果按输入顺序返回

    并发度由 threads（默认 settings.THREADS）限制；第 i 个场景的噪声种子由 seed 与 i 派生。
    """
    controller = _as_controller(policy)
    semaphore = asyncio.Semaphore(threads or settings.THREADS)

    async def _run(index: int, scenario: Scenario) -> Tuple[int, ScenarioResult]:
        async with semaphore:
            result = await asyncio.to_thread(
                run_scenario, controller, scenario, dt, noise_std, derive_seed(seed, "scenario", index)
            )
            return index, result

    tasks = [_run(i, s) for i, s in enumerate(scenarios)]
    results: List[Optional[ScenarioResult]] = [None] * len(tasks)
    with tqdm(total=len(tasks), desc=desc, unit="场景") as bar:
        for coro in asyncio.as_completed(tasks):
            index, result = await coro
            results[index] = result
            bar.update(1)
    return [r for r in results if r is not None]


def trajectory_frame(result: ScenarioResult) -> pd.DataFrame:
    """轨迹表，列为 t,x,y,theta,mode,label"""
    return pd.DataFrame([p.model_dump() for p in result.trajectory], columns=["t", "x", "y", "theta", "mode", "label"])


def save_trajectory_csv(result: ScenarioResult, path: Union[str, Path]) -> None:
    buf = io.StringIO()
    trajectory_frame(result).to_csv(buf, index=False)
    write_text_atomic(buf.getvalue(), path)
