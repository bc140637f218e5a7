"""
认证模块：区间界传播与安全域
"""

from .bounds import (
    certified_losses_and_grad,
    certified_worst_case_loss,
    domain_bounds,
    is_certified,
    propagate,
    propagate_batch,
    safety_bound,
)
from .domain_io import load_domains, save_domain_generator, save_domains
from .interval import BoxDomain, IntervalTensor, SafetyDomain, box_distances, stack_domains

__all__ = [
    "certified_losses_and_grad",
    "certified_worst_case_loss",
    "domain_bounds",
    "is_certified",
    "propagate",
    "propagate_batch",
    "safety_bound",
    "load_domains",
    "save_domain_generator",
    "save_domains",
    "BoxDomain",
    "IntervalTensor",
    "SafetyDomain",
    "box_distances",
    "stack_domains",
]
