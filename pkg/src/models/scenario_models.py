from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class Pose(BaseModel):
    x: float
    y: float
    theta: float = 0.0


class Segment(BaseModel):
    """线段障碍物（墙）"""
    x1: float
    y1: float
    x2: float
    y2: float


class Box(BaseModel):
    """轴对齐盒子障碍物"""
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @model_validator(mode="after")
    def _ordered(self) -> "Box":
        if self.xmin >= self.xmax or self.ymin >= self.ymax:
            raise ValueError(f"盒子边界非法: {self}")
        return self


class Waypoint(BaseModel):
    t: float = Field(..., ge=0.0, description="到达时刻 (s)")
    x: float
    y: float


class CommandEvent(BaseModel):
    t: float = Field(..., ge=0.0, description="触发时刻 (s)")
    kind: Literal["enable", "disable"] = Field(..., description="手势命令")


class SuccessCriteria(BaseModel):
    d_min: float = Field(0.7, description="结束时与操作员的最小距离 (m)")
    d_max: float = Field(1.5, description="结束时与操作员的最大距离 (m)")
    bearing_max_deg: float = Field(30.0, description="结束时允许的最大方位角 (度)")


class Scenario(BaseModel):
    """闭环评估场景"""
    id: int = Field(0, description="场景编号")
    name: str = Field(..., description="场景名称")
    bounds: Tuple[float, float, float, float] = Field((-10.0, -10.0, 10.0, 10.0), description="场地 (xmin, ymin, xmax, ymax)")
    walls: List[Segment] = Field(default_factory=list, description="墙体线段")
    boxes: List[Box] = Field(default_factory=list, description="盒子障碍物")
    robot_start: Pose = Field(..., description="机器人初始位姿")
    operator_waypoints: List[Waypoint] = Field(..., min_length=1, description="操作员路径点")
    events: List[CommandEvent] = Field(default_factory=list, description="脚本化的使能/禁用命令")
    success: SuccessCriteria = Field(default_factory=SuccessCriteria, description="成功判据")
    duration: float = Field(..., gt=0.0, description="场景时长 (s)")
    initial_mode: Literal["idle", "active"] = Field("idle", description="控制器初始状态")

    @model_validator(mode="after")
    def _check_geometry(self) -> "Scenario":
        xmin, ymin, xmax, ymax = self.bounds
        if xmin >= xmax or ymin >= ymax:
            raise ValueError(f"场地边界非法: {self.bounds}")
        times = [w.t for w in self.operator_waypoints]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("操作员路径点时间必须非递减")
        for w in self.operator_waypoints:
            if not (xmin < w.x < xmax and ymin < w.y < ymax):
                raise ValueError(f"操作员路径点越界: ({w.x}, {w.y})")
        p = self.robot_start
        if not (xmin < p.x < xmax and ymin < p.y < ymax):
            raise ValueError(f"机器人初始位置越界: ({p.x}, {p.y})")
        return self


class TrajectoryPoint(BaseModel):
    t: float
    x: float
    y: float
    theta: float
    mode: str
    label: str


class ScenarioResult(BaseModel):
    """单个场景的闭环评估结果"""
    scenario_id: int
    name: str
    success: bool
    collision: bool
    final_distance: float = Field(..., description="结束时与操作员中点的距离 (m)")
    final_bearing_deg: float = Field(..., description="结束时操作员方位角 (度)")
    failure_time: Optional[float] = Field(None, description="失败时刻")
    failure_reason: Optional[Literal["collision", "final_distance", "final_bearing"]] = None
    label_at_failure: Optional[str] = Field(None, description="失败时刻控制器输出")
    forward_at_failure: Optional[bool] = Field(None, description="失败时是否处于前进运动")
    trajectory: List[TrajectoryPoint] = Field(default_factory=list)


class WorldSamplerConfig(BaseModel):
    """随机世界采样配置（数据集生成）"""
    arena_half_min: float = Field(2.5, gt=0.0, description="场地半宽下限 (m)")
    arena_half_max: float = Field(6.0, gt=0.0, description="场地半宽上限 (m)")
    max_boxes: int = Field(4, ge=0, description="盒子障碍物个数上限")
    max_walls: int = Field(2, ge=0, description="墙体线段个数上限")
    clearance: float = Field(0.25, gt=0.0, description="机器人与障碍物的最小间隙 (m)")
    distance_range: Tuple[float, float] = Field((0.35, 2.6), description="操作员距离采样范围 (m)")
    bearing_max_deg: float = Field(100.0, gt=0.0, le=135.0, description="操作员方位角采样范围 (度)")
    stay_fraction: float = Field(0.2, ge=0.0, le=1.0, description="直接在目标区采样的比例")
    noise_std: float = Field(0.0, ge=0.0, description="测距高斯噪声标准差 (m)")
