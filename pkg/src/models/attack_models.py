from typing import Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class AttackConfig(BaseModel):
    """FGSM / PGD 攻击配置"""
    epsilon: float = Field(0.0, ge=0.0, description="扰动半径 ε（输入单位；图像按 8 位刻度换算后的值）")
    steps: int = Field(20, ge=1, description="PGD 迭代步数（FGSM 忽略）")
    step_size: Optional[float] = Field(None, gt=0.0, description="步长；未设置时逐维取 2.5×半宽/steps")
    random_init: bool = Field(True, description="是否在盒内随机初始化")
    norm: Literal["l_inf"] = Field("l_inf", description="范数类型")
    clamp: Optional[Tuple[float, float]] = Field(None, description="全局合法取值范围 [lo, hi]")
    seed: int = Field(0, description="随机初始化种子")

    @model_validator(mode="after")
    def _check_clamp(self) -> "AttackConfig":
        if self.clamp is not None and self.clamp[0] > self.clamp[1]:
            raise ValueError(f"clamp 下界大于上界: {self.clamp}")
        return self


class AttackRecord(BaseModel):
    """单个样本/安全域的攻击结果（JSON lines 一行）"""
    sample_index: int = Field(..., description="样本或安全域序号")
    clean_label: int = Field(..., description="干净输入（或盒中心）的预测类别")
    attacked_label: int = Field(..., description="攻击后输入的预测类别")
    loss_before: float = Field(..., description="攻击前规范损失")
    loss_after: float = Field(..., description="攻击后规范损失")
    success: bool = Field(..., description="攻击后类别是否落在可接受集合之外")
