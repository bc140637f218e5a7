"""
经验攻击：FGSM 与盒内 PGD
"""

from .evaluation import adversarial_accuracy, attack_dataset, attack_domains, save_attack_records
from .gradient_attacks import fgsm, fgsm_batch, pgd_batch, pgd_in_box, pixel_epsilon, spec_loss_grad

__all__ = [
    "adversarial_accuracy",
    "attack_dataset",
    "attack_domains",
    "save_attack_records",
    "fgsm",
    "fgsm_batch",
    "pgd_batch",
    "pgd_in_box",
    "pixel_epsilon",
    "spec_loss_grad",
]
