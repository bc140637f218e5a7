from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.attack_models import AttackConfig


class TrainConfig(BaseModel):
    """安全域训练配置（全部超参数）"""
    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(1.0, alias="lambda", ge=0.0, description="安全项权重 λ")
    delta: float = Field(0.1, gt=0.0, description="安全阈值 δ")
    batch_train: int = Field(32, ge=1, description="训练样本批大小 b_t")
    batch_safety: int = Field(16, ge=1, description="安全域批大小 b_s")
    learning_rate: float = Field(0.01, gt=0.0, description="学习率 α")
    momentum: float = Field(0.0, ge=0.0, lt=1.0, description="动量系数，0 即原始 SGD")
    min_epochs: int = Field(5, ge=0, description="最少训练轮数 i_min")
    max_epochs: int = Field(50, ge=1, description="最多训练轮数（终止上限）")
    inner_mode: Literal["certified", "empirical"] = Field("certified", description="内层最大化方式")
    seed: int = Field(0, description="随机种子")
    safety_check_period: int = Field(1, ge=1, description="两次完整 safety_bound 评估之间的轮数")
    ramp_epochs: int = Field(0, ge=0, description="安全域由中心线性扩张到完整大小所用轮数，0 表示不扩张")
    attack: AttackConfig = Field(default_factory=lambda: AttackConfig(steps=10), description="经验模式下的 PGD 配置")
    check_conflicts: bool = Field(True, description="训练前检查样本与安全域是否冲突")

    @model_validator(mode="after")
    def _check_epochs(self) -> "TrainConfig":
        if self.max_epochs < self.min_epochs:
            raise ValueError(f"max_epochs ({self.max_epochs}) 必须不小于 min_epochs ({self.min_epochs})")
        return self


class EpochTrace(BaseModel):
    """单轮训练记录"""
    epoch: int = Field(..., ge=1, description="轮次（从 1 开始）")
    train_loss: float = Field(..., description="本轮平均经验风险")
    safety_term: float = Field(..., description="本轮平均安全项（未乘 λ）")
    certified_bound: Optional[float] = Field(None, description="本轮评估的 safety_bound，未评估为空")


class TrainReport(BaseModel):
    """训练报告"""
    epochs_run: int = Field(..., ge=0, description="实际训练轮数")
    final_safety_bound: float = Field(..., description="最终 safety_bound（无安全域时为 0）")
    converged: bool = Field(..., description="safety_bound ≤ δ")
    inner_mode: str = Field(..., description="内层最大化方式")
    num_domains: int = Field(..., ge=0, description="安全域个数 k")
    delta: float = Field(..., description="安全阈值 δ")
    train_accuracy: Optional[float] = Field(None, description="最终训练集准确率")
    val_accuracy: Optional[float] = Field(None, description="最终验证集准确率")
    total_training_loss: Optional[float] = Field(None, description="最终总训练损失（经验风险 + λ × 平均认证损失）")
    delta_lower_bounds_loss: Optional[bool] = Field(None, description="总训练损失 ≥ δ 是否成立（域内外损失检验的前提）")
    trace: List[EpochTrace] = Field(default_factory=list, description="逐轮记录")

    @model_validator(mode="after")
    def _check_trace(self) -> "TrainReport":
        if len(self.trace) != self.epochs_run:
            raise ValueError("trace 长度必须等于 epochs_run")
        return self
