"""
误差剖面分析
"""

from .profiles import (
    IndexDomain,
    conditional_errors,
    conditional_from_losses,
    neighbor_lists,
    singleton_consistent,
    sample_losses,
    singleton_candidates,
    systematic_error,
    transient_errors,
    transient_from_losses,
    whole_domain_exceeds,
)
from .report import analyze, histogram_frame, save_histogram_csv, save_report
from .theorem import boundary_localization, inside_any, nearest_domain_distance, theorem1_check

__all__ = [
    "IndexDomain",
    "conditional_errors",
    "conditional_from_losses",
    "neighbor_lists",
    "singleton_consistent",
    "sample_losses",
    "singleton_candidates",
    "systematic_error",
    "transient_errors",
    "transient_from_losses",
    "whole_domain_exceeds",
    "analyze",
    "histogram_frame",
    "save_histogram_csv",
    "save_report",
    "boundary_localization",
    "inside_any",
    "nearest_domain_distance",
    "theorem1_check",
]
