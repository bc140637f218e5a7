"""
命令行摘要表

所有表格先构造成 pandas DataFrame，再以纯文本打印到标准输出。
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.models.attack_models import AttackRecord
from src.models.error_models import ErrorReport
from src.models.scenario_models import ScenarioResult
from src.models.train_models import TrainReport

PASS_MARK = "✓"
FAIL_MARK = "✗"


def render(df: pd.DataFrame, title: Optional[str] = None) -> str:
    text = df.to_string(index=False)
    if title:
        bar = "=" * max(len(title), 20)
        return f"{title}\n{bar}\n{text}"
    return text


def train_summary(report: TrainReport) -> pd.DataFrame:
    rows = [
        ("轮数", report.epochs_run),
        ("安全域个数", report.num_domains),
        ("内层模式", report.inner_mode),
        ("safety_bound", f"{report.final_safety_bound:.4f}"),
        ("δ", report.delta),
        ("收敛", report.converged),
        ("训练准确率", "-" if report.train_accuracy is None else f"{report.train_accuracy:.3f}"),
        ("验证准确率", "-" if report.val_accuracy is None else f"{report.val_accuracy:.3f}"),
        ("总训练损失", "-" if report.total_training_loss is None else f"{report.total_training_loss:.4f}"),
    ]
    return pd.DataFrame(rows, columns=["项目", "值"])


def confusion_frame(matrix: np.ndarray, class_names: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """行为真实类别，列为预测类别"""
    names = list(class_names) if class_names is not None else [str(i) for i in range(matrix.shape[0])]
    names = names[: matrix.shape[0]] + [str(i) for i in range(len(names), matrix.shape[0])]
    df = pd.DataFrame(matrix, columns=names)
    df.insert(0, "真实\\预测", names)
    return df


def certify_summary(bounds: np.ndarray, delta: float, top: int = 10) -> pd.DataFrame:
    """最坏的若干个安全域及其认证界"""
    order = np.argsort(-bounds, kind="stable")[:top]
    return pd.DataFrame(
        {
            "domain": order.astype(int),
            "bound": [f"{bounds[i]:.4f}" for i in order],
            "certified": [PASS_MARK if bounds[i] <= delta else FAIL_MARK for i in order],
        }
    )


def attack_summary(records: Sequence[AttackRecord]) -> pd.DataFrame:
    n = len(records)
    successes = sum(r.success for r in records)
    gains = [r.loss_after - r.loss_before for r in records]
    rows = [
        ("攻击数", n),
        ("成功数", successes),
        ("成功率", f"{successes / n:.3f}" if n else "-"),
        ("平均损失增量", f"{float(np.mean(gains)):.4f}" if n else "-"),
    ]
    return pd.DataFrame(rows, columns=["项目", "值"])


def error_summary(report: ErrorReport) -> pd.DataFrame:
    rows = [
        ("瞬态误差", len(report.transient)),
        ("孤立高损失点", len(report.isolated)),
        ("邻居不足的高损失点", len(report.undersampled)),
        ("系统误差", report.systematic),
        ("整域平均损失 > η", report.systematic_as_conditional),
        ("条件误差域", len(report.conditional)),
        ("跳过的候选域", len(report.skipped)),
        ("单点一致性", report.singleton_consistent),
    ]
    if report.theorem1 is not None:
        t = report.theorem1
        rows.append(("域内/域外平均损失", f"{t.mean_in:.4f} / {t.mean_out:.4f}"))
        rows.append(("域内 ≤ 域外", t.holds))
    if report.boundary_stats is not None:
        b = report.boundary_stats
        rows.append(("新增误差", b.n_new_errors))
        rows.append((f"距安全域 ≤ K={b.locality_K}", f"{b.fraction_within_K:.3f}"))
    return pd.DataFrame(rows, columns=["项目", "值"])


def scenario_grid(columns: Dict[str, List[ScenarioResult]]) -> pd.DataFrame:
    """
    场景 × 模型成功表，末行为各列的成功总数

    Args:
        columns: 列名 -> 按相同场景顺序排列的结果

    Returns:
        DataFrame: 第一列为场景名，其余列为 ✓/✗
    """
    if not columns:
        return pd.DataFrame(columns=["场景"])
    first = next(iter(columns.values()))
    data: Dict[str, List[str]] = {"场景": [f"{r.scenario_id}. {r.name}" for r in first] + ["Total"]}
    for name, results in columns.items():
        if [r.name for r in results] != [r.name for r in first]:
            raise ValueError(f"列 {name} 的场景顺序与其他列不一致")
        marks = [PASS_MARK if r.success else FAIL_MARK for r in results]
        data[name] = marks + [f"{sum(r.success for r in results)}/{len(results)}"]
    return pd.DataFrame(data)


def nesting_violations(columns: Dict[str, List[ScenarioResult]]) -> List[Tuple[str, str, str]]:
    """
    失败嵌套检查: 第 k 列失败的场景在第 k+1 列也应失败

    Returns:
        违反项 (场景名, 第 k 列, 第 k+1 列)
    """
    names = list(columns)
    violations: List[Tuple[str, str, str]] = []
    for a, b in zip(names, names[1:]):
        for ra, rb in zip(columns[a], columns[b]):
            if not ra.success and rb.success:
                violations.append((ra.name, a, b))
    return violations


def failure_frame(results: Sequence[ScenarioResult]) -> pd.DataFrame:
    """失败场景的原因、时间与失败时的运动类别"""
    rows = [
        (r.name, r.failure_reason, r.failure_time, r.label_at_failure, r.forward_at_failure)
        for r in results
        if not r.success
    ]
    return pd.DataFrame(rows, columns=["场景", "原因", "时间", "类别", "前进中"])
