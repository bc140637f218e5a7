"""
安全域文件读写

文件为 JSON: {format_version: 1, input_dim, domains: [...]}，或以 generator 片段代替显式列表，
读取时按跟随仿真的安全等级即时生成。
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

from pydantic import ValidationError

from src.certify.interval import SafetyDomain
from src.models.domain_models import DomainGenerator, DomainRecord, SafetyDomainFile
from src.utils.exceptions import DomainError, FileFormatError, ShapeError
from src.utils.helpers import write_text_atomic

logger = logging.getLogger(__name__)


def domains_from_file_model(doc: SafetyDomainFile) -> List[SafetyDomain]:
    if doc.generator is not None:
        from src.followsim.domains import NUM_RAYS, gen_domains

        if doc.input_dim != NUM_RAYS:
            raise ShapeError(f"生成器产生 {NUM_RAYS} 维安全域，文件声明 input_dim={doc.input_dim}")
        return gen_domains(doc.generator.level)
    domains = []
    for i, rec in enumerate(doc.domains or []):
        if len(rec.lower) != doc.input_dim or len(rec.upper) != doc.input_dim:
            raise ShapeError(f"安全域 {i} 维度与 input_dim={doc.input_dim} 不一致")
        try:
            domains.append(SafetyDomain.create(rec.lower, rec.upper, rec.acceptable_labels))
        except DomainError as e:
            raise DomainError(f"安全域 {i} 非法: {e}") from e
    return domains


def load_domains(path: Union[str, Path], input_dim: Optional[int] = None) -> List[SafetyDomain]:
    """
    读取安全域文件

    Args:
        path: 文件路径
        input_dim: 给出时校验与网络输入维度一致

    Returns:
        List[SafetyDomain]: 安全域列表
    """
    try:
        doc = SafetyDomainFile.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise FileFormatError(f"安全域文件不是合法 JSON: {path} - {e}") from e
    except ValidationError as e:
        raise FileFormatError(f"安全域文件结构错误: {path} - {e}") from e
    if input_dim is not None and doc.input_dim != input_dim:
        raise ShapeError(f"安全域文件 input_dim={doc.input_dim} 与网络输入维度 {input_dim} 不一致")
    domains = domains_from_file_model(doc)
    logger.info(f"读取安全域 {len(domains)} 个: {path}")
    return domains


def save_domains(domains: Sequence[SafetyDomain], input_dim: int, path: Union[str, Path]) -> None:
    """显式写出全部安全域"""
    doc = SafetyDomainFile(
        input_dim=input_dim,
        domains=[
            DomainRecord(
                lower=[float(v) for v in d.lower],
                upper=[float(v) for v in d.upper],
                acceptable_labels=sorted(d.acceptable),
            )
            for d in domains
        ],
    )
    write_text_atomic(doc.model_dump_json(indent=2, exclude_none=True), path)


def save_domain_generator(level: int, input_dim: int, path: Union[str, Path]) -> None:
    """只写生成器片段"""
    doc = SafetyDomainFile(input_dim=input_dim, generator=DomainGenerator(level=level))
    write_text_atomic(doc.model_dump_json(indent=2, exclude_none=True), path)
