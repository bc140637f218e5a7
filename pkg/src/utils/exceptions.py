"""
领域异常定义

全部继承自 ValueError，命令行入口统一捕获后转换为非零退出码。
"""

from typing import Optional


class ShapeError(ValueError):
    """张量/网络维度不匹配"""


class NonFiniteError(ValueError):
    """张量、梯度或损失中出现 NaN/Inf"""


class InvalidLabelError(ValueError):
    """类别索引越界或可接受标签集合非法"""


class EmptyDatasetError(ValueError):
    """数据集或条件集合为空"""


class DomainError(ValueError):
    """安全域非法（下界大于上界、维度不符、安全等级不存在等）"""


class ScenarioError(ValueError):
    """场景文件格式错误或初始位姿非法"""


class FileFormatError(ValueError):
    """模型/数据集/安全域文件格式错误"""


class ConflictError(ValueError):
    """训练样本位于安全域内却带有不可接受的标签（违反非冲突数据假设）"""

    def __init__(self, sample_index: int, domain_index: int, label: Optional[int] = None):
        self.sample_index = sample_index
        self.domain_index = domain_index
        self.label = label
        super().__init__(
            f"样本 {sample_index} (标签 {label}) 位于安全域 {domain_index} 内，但标签不在可接受集合中"
        )
