from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator


class DomainRecord(BaseModel):
    """安全域文件中的单个轴对齐盒子及其可接受标签"""
    lower: List[float] = Field(..., description="逐输入下界")
    upper: List[float] = Field(..., description="逐输入上界")
    acceptable_labels: List[int] = Field(..., min_length=1, description="可接受标签集合 z_i")


class DomainGenerator(BaseModel):
    """生成器片段：由跟随仿真按安全等级生成安全域"""
    kind: Literal["followsim_level"] = Field("followsim_level", description="生成器类型")
    level: int = Field(..., ge=0, le=3, description="安全等级 0-3")


class SafetyDomainFile(BaseModel):
    """安全域文件；domains 与 generator 二选一"""
    format_version: Literal[1] = Field(1, description="格式版本")
    input_dim: int = Field(..., ge=1, description="输入维度")
    domains: Optional[List[DomainRecord]] = Field(None, description="显式给出的安全域")
    generator: Optional[DomainGenerator] = Field(None, description="安全域生成器")

    @model_validator(mode="after")
    def _one_source(self) -> "SafetyDomainFile":
        if (self.domains is None) == (self.generator is None):
            raise ValueError("安全域文件必须且只能包含 domains 或 generator 之一")
        return self
