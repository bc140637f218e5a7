from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class ErrorAnalysisConfig(BaseModel):
    """误差剖面分析配置"""
    eta: float = Field(..., gt=0.0, description="损失阈值 η")
    epsilon: float = Field(..., gt=0.0, description="邻域半径 ε")
    norm: Literal["l_inf", "l2"] = Field("l_inf", description="距离范数")
    locality_K: float = Field(1.0, gt=0.0, description="局部性常数 K")
    min_neighbors: int = Field(1, ge=1, description="判定瞬态误差所需的最少邻居数")
    loss_kind: Literal["cross_entropy", "zero_one"] = Field("cross_entropy", description="逐样本损失类型")
    histogram_bins: int = Field(10, ge=1, description="边界距离直方图的分箱数")


class ConditionalErrorEntry(BaseModel):
    """候选条件误差域的检验结果"""
    domain_id: int = Field(..., description="候选域序号")
    mean_inside: float = Field(..., description="域内平均损失")
    mean_outside: float = Field(..., description="域外平均损失")
    n_inside: int = Field(..., description="域内样本数")
    n_outside: int = Field(..., description="域外样本数")
    is_error: bool = Field(..., description="域内均值 > η 且域外均值 < η")


class SkippedCandidate(BaseModel):
    """因一侧为空而跳过的候选域"""
    domain_id: int = Field(..., description="候选域序号")
    reason: str = Field(..., description="跳过原因")


class Theorem1Result(BaseModel):
    """安全域并集内外的条件平均损失"""
    mean_in: float = Field(..., description="∪D_i 内平均损失")
    mean_out: float = Field(..., description="∪D_i 外平均损失")
    n_in: int = Field(..., description="域内样本数")
    n_out: int = Field(..., description="域外样本数")
    holds: bool = Field(..., description="mean_in ≤ mean_out")
    training_loss_ge_delta: Optional[bool] = Field(None, description="训练损失 ≥ δ 前提是否成立（未知为空）")


class BoundaryStats(BaseModel):
    """安全域训练新引入误差到最近安全域的距离分布"""
    bin_edges: List[float] = Field(default_factory=list, description="直方图分箱边界")
    counts: List[int] = Field(default_factory=list, description="各分箱计数")
    n_new_errors: int = Field(0, description="新引入误差个数")
    n_inside: int = Field(0, description="位于某个安全域内部的新误差个数")
    fraction_within_K: float = Field(0.0, description="距最近安全域不超过 K 的比例")
    locality_K: float = Field(..., description="局部性常数 K")
    error_indices: List[int] = Field(default_factory=list, description="新引入误差的样本序号")
    distances: List[float] = Field(default_factory=list, description="对应的最近安全域距离")


class ErrorReport(BaseModel):
    """误差剖面报告"""
    transient: List[int] = Field(default_factory=list, description="瞬态误差样本序号")
    isolated: List[int] = Field(default_factory=list, description="高损失但 ε 内无邻居的样本序号")
    undersampled: List[int] = Field(default_factory=list, description="高损失、邻居损失全部 < η 但邻居数不足 min_neighbors 的样本序号")
    systematic: bool = Field(False, description="是否存在系统误差")
    systematic_as_conditional: bool = Field(False, description="整个数据域作为候选域时域内平均损失是否 > η")
    conditional: List[ConditionalErrorEntry] = Field(default_factory=list, description="被判定为条件误差的候选域")
    skipped: List[SkippedCandidate] = Field(default_factory=list, description="跳过的候选域")
    singleton_consistent: Optional[bool] = Field(None, description="瞬态误差作为单点条件误差是否全部被检出")
    theorem1: Optional[Theorem1Result] = Field(None, description="安全域并集内外平均损失检验")
    boundary_stats: Optional[BoundaryStats] = Field(None, description="边界定位统计")
