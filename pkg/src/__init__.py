"""
安全域训练工具包
"""

__version__ = "0.1.0"
