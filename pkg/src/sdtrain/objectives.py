"""
训练目标的两项：经验风险与安全项

总梯度 ∇ = ∇_ERM + λ·∇_safety，安全项在认证模式下是区间上界的梯度，
在经验模式下是 PGD 最坏点处规范损失的梯度。
"""

from typing import Literal, Optional, Sequence, Tuple

from src.attacks.gradient_attacks import pgd_batch, spec_loss_grad
from src.certify.bounds import certified_losses_and_grad
from src.certify.interval import SafetyDomain, stack_domains
from src.models.attack_models import AttackConfig
from src.tensorcore.data import Dataset
from src.tensorcore.network import Gradient, Network, loss_and_grad
from src.utils.exceptions import DomainError, ShapeError

InnerMode = Literal["certified", "empirical"]


def empirical_risk_grad(net: Network, batch: Dataset) -> Tuple[float, Gradient]:
    """批平均交叉熵及其参数梯度"""
    batch.require_nonempty("训练批")
    if batch.input_dim != net.input_dim:
        raise ShapeError(f"训练批维度 {batch.input_dim} 与网络输入维度 {net.input_dim} 不一致")
    loss, grad = loss_and_grad(net, batch.x, batch.y)
    return loss, Gradient(grad.params)


def safety_term_grad(
    net: Network,
    domains: Sequence[SafetyDomain],
    mode: InnerMode = "certified",
    attack: Optional[AttackConfig] = None,
) -> Tuple[float, Gradient]:
    """
    一批安全域上内层最大化损失的均值及其参数梯度

    Args:
        net: 网络
        domains: 非空安全域批
        mode: "certified" 对 IBP 上界求导；"empirical" 对 PGD 最坏点的损失求导
        attack: 经验模式使用的 PGD 配置

    Returns:
        (平均损失, 梯度)
    """
    if not domains:
        raise DomainError("安全域批为空")
    lower, upper, masks = stack_domains(domains, net.output_dim)
    if lower.shape[1] != net.input_dim:
        raise ShapeError(f"安全域维度 {lower.shape[1]} 与网络输入维度 {net.input_dim} 不一致")
    k = len(domains)
    if mode == "certified":
        losses, grad = certified_losses_and_grad(net, lower, upper, masks)
        assert grad is not None
        return float(losses.mean()), grad
    worst, _ = pgd_batch(net, lower, upper, masks, attack or AttackConfig(steps=10))
    losses, grad = spec_loss_grad(net, worst, masks, scale=1.0 / k)
    return float(losses.mean()), Gradient(grad.params)
