"""
命令行核心模块

子命令实现、运行清单与摘要表。
"""

from .commands import (
    cmd_analyze,
    cmd_attack,
    cmd_certify,
    cmd_eval_scenarios,
    cmd_gen_data,
    cmd_gen_domains,
    cmd_plot_domain,
    cmd_train,
)
from .manifest import ManifestRecorder, manifest_path

__all__ = [
    "cmd_analyze",
    "cmd_attack",
    "cmd_certify",
    "cmd_eval_scenarios",
    "cmd_gen_data",
    "cmd_gen_domains",
    "cmd_plot_domain",
    "cmd_train",
    "ManifestRecorder",
    "manifest_path",
]
