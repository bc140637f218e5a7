"""
运行清单

每条命令在主输出旁原子写入 <output>.manifest.json，记录命令行、配置快照、种子、
输入输出路径、工具版本与耗时。用清单中的配置与种子重新运行即可复现输出。
"""

import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from src import __version__
from src.models.manifest_models import RunManifest
from src.utils.helpers import format_timestamp, write_text_atomic

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


def manifest_path(output: Union[str, Path], command: str = "run") -> Path:
    """主输出对应的清单路径；目录输出的清单以命令名命名并写在目录内"""
    out = Path(output)
    if out.is_dir():
        return out / f"{command}{MANIFEST_SUFFIX}"
    name = out.name[: -len(out.suffix)] if out.suffix else out.name
    return out.with_name(name + MANIFEST_SUFFIX)


class ManifestRecorder:
    """
    记录一次命令运行

    用法:
        recorder = ManifestRecorder("train", argv, seed)
        recorder.add_input("data", path)
        recorder.add_output("model", path)
        recorder.finish(exit_code, primary_output)
    """

    def __init__(self, command: str, argv: List[str], seed: int, config: Optional[Dict[str, Any]] = None):
        self.command = command
        self.argv = list(argv)
        self.seed = int(seed)
        self.config: Dict[str, Any] = dict(config or {})
        self.inputs: Dict[str, str] = {}
        self.outputs: Dict[str, str] = {}
        self.started = datetime.now()

    def set_config(self, config: Dict[str, Any]) -> None:
        self.config = dict(config)

    def add_input(self, name: str, path: Union[str, Path]) -> None:
        self.inputs[name] = str(path)

    def add_output(self, name: str, path: Union[str, Path]) -> None:
        self.outputs[name] = str(path)

    def build(self, exit_code: int) -> RunManifest:
        return RunManifest(
            command=self.command,
            argv=self.argv,
            config=self.config,
            seed=self.seed,
            inputs=self.inputs,
            outputs=self.outputs,
            tool_version=__version__,
            started_at=format_timestamp(self.started),
            duration_s=(datetime.now() - self.started).total_seconds(),
            exit_code=exit_code,
        )

    def finish(self, exit_code: int, output: Union[str, Path]) -> Path:
        """写出清单并返回其路径"""
        path = manifest_path(output, self.command)
        write_text_atomic(self.build(exit_code).model_dump_json(indent=2), path)
        logger.debug(f"运行清单已写入 {path}")
        return path
