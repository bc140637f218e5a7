from typing import Any, Dict, List

from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    """每条命令输出旁原子写入的运行清单，可据此复现结果"""
    command: str = Field(..., description="子命令名")
    argv: List[str] = Field(default_factory=list, description="完整命令行参数")
    config: Dict[str, Any] = Field(default_factory=dict, description="配置快照")
    seed: int = Field(..., description="主随机种子")
    inputs: Dict[str, str] = Field(default_factory=dict, description="输入文件路径")
    outputs: Dict[str, str] = Field(default_factory=dict, description="输出文件路径")
    tool_version: str = Field(..., description="工具版本")
    started_at: str = Field(..., description="开始时间")
    duration_s: float = Field(..., description="墙钟耗时 (s)")
    exit_code: int = Field(0, description="退出码")
