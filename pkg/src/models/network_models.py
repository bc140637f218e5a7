from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class LayerRecord(BaseModel):
    """模型文件中的单层记录，参数为 base64 编码的小端 float32"""
    kind: Literal["dense", "conv1d", "relu", "flatten"] = Field(..., description="层类型")
    in_features: Optional[int] = Field(None, description="Dense 输入维度")
    out_features: Optional[int] = Field(None, description="Dense 输出维度")
    in_channels: Optional[int] = Field(None, description="Conv1D 输入通道数")
    out_channels: Optional[int] = Field(None, description="Conv1D 输出通道数")
    kernel_size: Optional[int] = Field(None, description="Conv1D 卷积核长度")
    stride: Optional[int] = Field(None, description="Conv1D 步长")
    padding: Optional[int] = Field(None, description="Conv1D 零填充长度")
    weights: Optional[str] = Field(None, description="权重/卷积核 (base64)")
    bias: Optional[str] = Field(None, description="偏置 (base64)")


class ModelFile(BaseModel):
    """网络模型文件"""
    format_version: Literal[1] = Field(1, description="格式版本")
    input_dim: int = Field(..., ge=1, description="输入维度")
    output_dim: int = Field(..., ge=1, description="输出类别数")
    layers: List[LayerRecord] = Field(default_factory=list, description="层序列")
