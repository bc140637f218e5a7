"""
辅助工具模块
"""
import json
import logging
import os
import tempfile
import zlib
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

logger = logging.getLogger(__name__)


def ensure_directory(path: Union[str, Path]) -> Path:
    """
    确保目录存在，如果不存在则创建

    Args:
        path: 目录路径

    Returns:
        Path: Path对象
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_bytes_atomic(data: bytes, file_path: Union[str, Path]) -> None:
    """
    原子写入：先写同目录临时文件，再 os.replace 覆盖目标

    Args:
        data: 文件内容
        file_path: 目标路径
    """
    file_path = Path(file_path)
    ensure_directory(file_path.parent)
    fd, tmp_path = tempfile.mkstemp(prefix=f".{file_path.name}.", dir=file_path.parent)
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp_path, file_path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_text_atomic(text: str, file_path: Union[str, Path]) -> None:
    """原子写入 UTF-8 文本"""
    write_bytes_atomic(text.encode('utf-8'), file_path)


def load_json_file(file_path: Union[str, Path]) -> Dict[str, Any]:
    """
    加载JSON文件

    Args:
        file_path: 文件路径

    Returns:
        Dict[str, Any]: JSON数据
    """
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError:
        logger.error(f"文件不存在: {file_path}")
        raise
    except json.JSONDecodeError as e:
        logger.error(f"JSON格式错误: {file_path} - {e}")
        raise


def save_json_file(data: Any, file_path: Union[str, Path]) -> None:
    """
    原子地保存数据到JSON文件

    Args:
        data: 要保存的数据
        file_path: 文件路径
    """
    try:
        write_text_atomic(json.dumps(data, ensure_ascii=False, indent=2), file_path)
    except Exception as e:
        logger.error(f"保存文件失败: {file_path} - {e}")
        raise


def derive_seed(seed: int, *keys: Union[str, int]) -> int:
    """
    由主种子和若干键派生子种子，使各随机组件互不干扰且可复现

    Args:
        seed: 主种子
        keys: 组件名或序号

    Returns:
        int: 32位子种子
    """
    entropy = [int(seed) & 0xFFFFFFFF]
    for key in keys:
        entropy.append(zlib.crc32(key.encode('utf-8')) if isinstance(key, str) else int(key) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def format_timestamp(timestamp: Optional[datetime] = None) -> str:
    """
    格式化时间戳

    Args:
        timestamp: 时间戳，默认为当前时间

    Returns:
        str: 格式化的时间字符串
    """
    if timestamp is None:
        timestamp = datetime.now()
    return timestamp.strftime("%Y-%m-%d %H:%M:%S")


class Timer:
    """计时器上下文管理器"""

    def __init__(self, description: str = "操作"):
        """
        初始化计时器

        Args:
            description: 描述信息
        """
        self.description = description
        self.start_time: Optional[datetime] = None
        self.end_time: Optional[datetime] = None

    def __enter__(self) -> "Timer":
        self.start_time = datetime.now()
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        self.end_time = datetime.now()
        logger.info(f"{self.description}完成，耗时: {self.duration:.2f}秒")

    @property
    def duration(self) -> float:
        """获取持续时间（秒）"""
        if self.start_time is None:
            return 0.0
        end = self.end_time or datetime.now()
        return (end - self.start_time).total_seconds()
