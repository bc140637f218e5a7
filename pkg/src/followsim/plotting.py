"""
安全域与场景轨迹可视化

plot_safety_domain 把一个安全域在 270° 视场上的逐射线 [下界, 上界] 画成带状区域，
可叠加一条干净扫描与一条攻击后的扫描；plot_trajectory 画出场景的俯视图与机器人轨迹。
"""

import logging
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Circle, Rectangle  # noqa: E402

from src.certify.interval import SafetyDomain  # noqa: E402
from src.followsim.lidar import FIELD_OF_VIEW_DEG, NUM_RAYS, RESOLUTION_DEG  # noqa: E402
from src.followsim.scenario import operator_at  # noqa: E402
from src.followsim.world import FOOT_RADIUS, ROBOT_RADIUS, World  # noqa: E402
from src.models.scenario_models import Scenario, ScenarioResult  # noqa: E402
from src.utils.exceptions import ShapeError  # noqa: E402
from src.utils.helpers import ensure_directory  # noqa: E402

logger = logging.getLogger(__name__)


def _ray_degrees() -> np.ndarray:
    return -FIELD_OF_VIEW_DEG / 2 + RESOLUTION_DEG * np.arange(NUM_RAYS)


def plot_safety_domain(
    domain: SafetyDomain,
    path: Union[str, Path],
    scan: Optional[np.ndarray] = None,
    attacked: Optional[np.ndarray] = None,
    scan_label: Optional[str] = None,
    attacked_label: Optional[str] = None,
    title: Optional[str] = None,
) -> Path:
    """
    绘制安全域的逐射线区间

    Args:
        domain: 541 维安全域
        path: 输出图片路径 (png)
        scan: 可选的干净扫描
        attacked: 可选的攻击后扫描
        scan_label / attacked_label: 图例中显示的预测类别
        title: 图标题

    Returns:
        Path: 写出的图片路径
    """
    if domain.box.dim != NUM_RAYS:
        raise ShapeError(f"只能绘制 {NUM_RAYS} 维安全域，实际 {domain.box.dim}")
    angles = _ray_degrees()
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.fill_between(angles, domain.lower, domain.upper, step="mid", color="tab:orange", alpha=0.35,
                    label="安全域")
    for values, name, style in ((scan, scan_label, "tab:blue"), (attacked, attacked_label, "tab:red")):
        if values is None:
            continue
        values = np.asarray(values, dtype=np.float32).reshape(-1)
        if values.size != NUM_RAYS:
            raise ShapeError(f"扫描长度必须是 {NUM_RAYS}，实际 {values.size}")
        ax.plot(angles, values, color=style, linewidth=0.8, label=name or "")
    ax.set_xlabel("方位角 (deg)")
    ax.set_ylabel("距离 (m)")
    ax.set_xlim(angles[0], angles[-1])
    ax.invert_xaxis()
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right")
    fig.tight_layout()
    out = Path(path)
    ensure_directory(out.parent)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    logger.debug(f"安全域图已保存: {out}")
    return out


def _draw_world(ax: plt.Axes, world: World) -> None:
    if world.bounds is not None:
        x0, y0, x1, y1 = world.bounds
        ax.add_patch(Rectangle((x0, y0), x1 - x0, y1 - y0, fill=False, edgecolor="black", linewidth=1.5))
    for x0, y0, x1, y1 in world.walls:
        ax.plot([x0, x1], [y0, y1], color="black", linewidth=2)
    for b in world.boxes:
        ax.add_patch(Rectangle((b.xmin, b.ymin), b.xmax - b.xmin, b.ymax - b.ymin, color="gray", alpha=0.7))


def plot_trajectory(result: ScenarioResult, scenario: Scenario, path: Union[str, Path]) -> Path:
    """绘制场景俯视图、操作员路径与机器人轨迹；失败时标出失败位置"""
    fig, ax = plt.subplots(figsize=(6, 6))
    _draw_world(ax, World.from_scenario(scenario))

    wps = scenario.operator_waypoints
    ax.plot([w.x for w in wps], [w.y for w in wps], "--", color="tab:green", label="操作员路径")
    end = result.trajectory[-1]
    for fx, fy in operator_at(scenario, end.t).feet():
        ax.add_patch(Circle((fx, fy), FOOT_RADIUS, color="tab:green"))

    xs = [p.x for p in result.trajectory]
    ys = [p.y for p in result.trajectory]
    ax.plot(xs, ys, color="tab:blue", label="机器人轨迹")
    ax.add_patch(Circle((end.x, end.y), ROBOT_RADIUS, fill=False, edgecolor="tab:blue"))
    if not result.success:
        ax.plot(end.x, end.y, "x", color="tab:red", markersize=10, label=result.failure_reason or "失败")

    status = "✓" if result.success else "✗"
    ax.set_title(f"{scenario.id}. {scenario.name} {status}")
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    out = Path(path)
    ensure_directory(out.parent)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
