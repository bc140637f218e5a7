"""
安全域训练
"""

from .adversarial import eps_ball_domains, fgsm_training_config
from .metrics import confusion_matrix, evaluate, mean_loss, per_sample_losses, predictions
from .objectives import empirical_risk_grad, safety_term_grad
from .trainer import check_non_conflicting, save_trace_csv, trace_frame, train

__all__ = [
    "eps_ball_domains",
    "fgsm_training_config",
    "confusion_matrix",
    "evaluate",
    "mean_loss",
    "per_sample_losses",
    "predictions",
    "empirical_risk_grad",
    "safety_term_grad",
    "check_non_conflicting",
    "save_trace_csv",
    "trace_frame",
    "train",
]
