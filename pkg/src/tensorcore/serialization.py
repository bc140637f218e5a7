"""
模型与数据集文件的读写

- 模型: JSON 文档，参数以 base64 编码的小端 float32 存放，往返逐位一致
- 数据集: 小端二进制，魔数 "SDT1" + 4 个 u32 头字段，随后每个样本 input_dim 个 f32 加一个 u32 标签
"""

import base64
import binascii
import json
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import ValidationError

from src.models.network_models import LayerRecord, ModelFile
from src.tensorcore.data import Dataset
from src.tensorcore.layers import Conv1D, Dense, Flatten, Layer, ReLU
from src.tensorcore.network import Network
from src.utils.exceptions import FileFormatError, ShapeError
from src.utils.helpers import write_bytes_atomic, write_text_atomic

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"SDT1"
DATASET_VERSION = 1
_HEADER = np.dtype([("version", "<u4"), ("count", "<u4"), ("input_dim", "<u4"), ("num_classes", "<u4")])


def _encode(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f4").tobytes()).decode("ascii")


def _decode(text: Optional[str], shape: tuple, what: str) -> np.ndarray:
    if text is None:
        raise FileFormatError(f"模型文件缺少参数: {what}")
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except (binascii.Error, ValueError) as e:
        raise FileFormatError(f"参数 {what} 不是合法的 base64: {e}") from e
    expected = int(np.prod(shape)) * 4
    if len(raw) != expected:
        raise FileFormatError(f"参数 {what} 字节数 {len(raw)} 与形状 {shape} 不符（期望 {expected}）")
    return np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape)


def _layer_record(layer: Layer) -> LayerRecord:
    if isinstance(layer, Dense):
        return LayerRecord(
            kind="dense", in_features=layer.in_features, out_features=layer.out_features,
            weights=_encode(layer.weights), bias=_encode(layer.bias),
        )
    if isinstance(layer, Conv1D):
        return LayerRecord(
            kind="conv1d", in_channels=layer.in_channels, out_channels=layer.out_channels,
            kernel_size=layer.kernel_size, stride=layer.stride, padding=layer.padding,
            weights=_encode(layer.kernels), bias=_encode(layer.bias),
        )
    return LayerRecord(kind=layer.kind)  # type: ignore[arg-type]


def _layer_from_record(rec: LayerRecord, index: int) -> Layer:
    where = f"第 {index} 层"
    if rec.kind == "dense":
        if rec.in_features is None or rec.out_features is None:
            raise FileFormatError(f"{where} Dense 缺少 in_features/out_features")
        w = _decode(rec.weights, (rec.out_features, rec.in_features), f"{where}.weights")
        b = _decode(rec.bias, (rec.out_features,), f"{where}.bias")
        return Dense(w, b)
    if rec.kind == "conv1d":
        if None in (rec.in_channels, rec.out_channels, rec.kernel_size):
            raise FileFormatError(f"{where} Conv1D 缺少通道数或卷积核长度")
        shape = (rec.out_channels, rec.in_channels, rec.kernel_size)
        k = _decode(rec.weights, shape, f"{where}.weights")
        b = _decode(rec.bias, (rec.out_channels,), f"{where}.bias")
        return Conv1D(k, b, rec.stride or 1, rec.padding or 0)
    return ReLU() if rec.kind == "relu" else Flatten()


def network_to_model_file(net: Network) -> ModelFile:
    return ModelFile(
        input_dim=net.input_dim,
        output_dim=net.output_dim,
        layers=[_layer_record(layer) for layer in net.astype(np.float32).layers],
    )


def network_from_model_file(doc: ModelFile) -> Network:
    layers: List[Layer] = [_layer_from_record(rec, i) for i, rec in enumerate(doc.layers)]
    try:
        return Network(layers, doc.input_dim, doc.output_dim)
    except ShapeError as e:
        raise FileFormatError(f"模型文件层结构不一致: {e}") from e


def save_model(net: Network, path: Union[str, Path]) -> None:
    """原子写入模型 JSON"""
    write_text_atomic(network_to_model_file(net).model_dump_json(indent=2), path)
    logger.debug(f"模型已保存: {path}")


def load_model(path: Union[str, Path]) -> Network:
    """读取模型 JSON；格式错误抛出 FileFormatError"""
    try:
        text = Path(path).read_text(encoding="utf-8")
        doc = ModelFile.model_validate(json.loads(text))
    except json.JSONDecodeError as e:
        raise FileFormatError(f"模型文件不是合法 JSON: {path} - {e}") from e
    except ValidationError as e:
        raise FileFormatError(f"模型文件结构错误: {path} - {e}") from e
    return network_from_model_file(doc)


def _record_dtype(input_dim: int) -> np.dtype:
    return np.dtype([("x", "<f4", (input_dim,)), ("y", "<u4")])


def dataset_to_bytes(dataset: Dataset) -> bytes:
    header = np.array([(DATASET_VERSION, len(dataset), dataset.input_dim, dataset.num_classes)], dtype=_HEADER)
    records = np.zeros(len(dataset), dtype=_record_dtype(dataset.input_dim))
    records["x"] = dataset.x
    records["y"] = dataset.y
    return DATASET_MAGIC + header.tobytes() + records.tobytes()


def dataset_from_bytes(data: bytes) -> Dataset:
    """
    解析二进制数据集

    Raises:
        FileFormatError: 魔数、版本或长度不符
    """
    if len(data) < 4 + _HEADER.itemsize or data[:4] != DATASET_MAGIC:
        raise FileFormatError("数据集文件魔数错误，期望 SDT1")
    header = np.frombuffer(data, dtype=_HEADER, count=1, offset=4)[0]
    version, count, input_dim, num_classes = (int(v) for v in header)
    if version != DATASET_VERSION:
        raise FileFormatError(f"不支持的数据集版本: {version}")
    if input_dim < 1 or num_classes < 1:
        raise FileFormatError(f"数据集头非法: input_dim={input_dim}, num_classes={num_classes}")
    rec = _record_dtype(input_dim)
    body = data[4 + _HEADER.itemsize:]
    if len(body) != count * rec.itemsize:
        raise FileFormatError(f"数据集长度不符: 头部声明 {count} 个样本，实际 {len(body)} 字节")
    records = np.frombuffer(body, dtype=rec, count=count)
    return Dataset(records["x"].astype(np.float32), records["y"].astype(np.int64), num_classes)


def save_dataset(dataset: Dataset, path: Union[str, Path]) -> None:
    write_bytes_atomic(dataset_to_bytes(dataset), path)
    logger.debug(f"数据集已保存: {path} ({len(dataset)} 个样本)")


def load_dataset(path: Union[str, Path]) -> Dataset:
    return dataset_from_bytes(Path(path).read_bytes())
