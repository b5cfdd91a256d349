"""
结果文件读写
CSV：表头行、17位有效数字、复数写成 re;im、末尾一行 "# key=value" 元数据
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from core import json_helper


logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
COMPLEX_SEPARATOR = ";"

PathLike = Union[str, Path]


def format_complex(value: complex) -> str:
    value = complex(value)
    return f"{FLOAT_FORMAT % value.real}{COMPLEX_SEPARATOR}{FLOAT_FORMAT % value.imag}"


def parse_complex(text: str) -> complex:
    real, imag = str(text).split(COMPLEX_SEPARATOR)
    return complex(float(real), float(imag))


def _encode_columns(df: pd.DataFrame) -> pd.DataFrame:
    """复数列转为 re;im 字符串，其余列保持原样"""
    encoded = df.copy()
    for column in encoded.columns:
        if np.iscomplexobj(encoded[column].to_numpy()):
            encoded[column] = [format_complex(z) for z in encoded[column]]
    return encoded


def metadata_line(metadata: Optional[Dict[str, Any]]) -> str:
    if not metadata:
        return ""
    return "# " + " ".join(f"{key}={value}" for key, value in metadata.items()) + "\n"


def write_csv(df: pd.DataFrame, path: PathLike, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """
    写出CSV

    元数据只应包含与运行环境无关的量（版本、Q、网格、扫描点数），
    保证相同输入在不同线程数下产生逐字节相同的文件。
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = _encode_columns(df).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
        handle.write(metadata_line(metadata))
    logger.info(f"已写出 {path} ({len(df)} 行)")
    return path


def read_csv(path: PathLike, complex_columns: Tuple[str, ...] = ()) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """读回CSV与末尾元数据；complex_columns 中的列解析为复数"""
    path = Path(path)
    metadata: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if lines and lines[-1].startswith("#"):
        for item in lines[-1][1:].split():
            key, _, value = item.partition("=")
            metadata[key] = value
    df = pd.read_csv(path, comment="#")
    for column in complex_columns:
        df[column] = [parse_complex(text) for text in df[column]]
    return df, metadata


def write_json(obj: Any, path: PathLike) -> Path:
    """用 UniversalEncoder 写出JSON（复数为 [re, im]）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json_helper.dumps(obj, indent=2))
        handle.write("\n")
    logger.info(f"已写出 {path}")
    return path


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as handle:
        return json_helper.loads(handle.read())
