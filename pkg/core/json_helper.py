import json
import pandas as pd
import numpy as np


class UniversalEncoder(json.JSONEncoder):
    """
    可以处理复数、NumPy 数组与标量、Pandas DataFrame 的通用编码器。
    复数写成 [re, im]，复数数组写成带类型标记的字典。
    """
    def default(self, obj):
        # 复数
        if isinstance(obj, (complex, np.complexfloating)):
            return [float(obj.real), float(obj.imag)]

        # NumPy 数组：复数组带类型元数据，实数组直接转列表
        if isinstance(obj, np.ndarray):
            if np.iscomplexobj(obj):
                return {
                    "__type__": "ComplexArray",
                    "shape": list(obj.shape),
                    "data": complex_pairs(obj),
                }
            return obj.tolist()

        # 处理 Pandas DataFrame
        if isinstance(obj, pd.DataFrame):
            return {
                "__type__": "DataFrame",
                "data": obj.to_dict(orient="tight")
            }

        # 处理 NumPy 标量类型，因为它们不被 json 库识别
        if isinstance(obj, (np.integer, np.floating, np.bool_)):
            return obj.item()

        # 对于其他类型，使用默认编码器
        return super().default(obj)


def universal_decoder(dct):
    """
    根据元数据将字典还原为复数数组或 DataFrame。
    """
    if "__type__" in dct:
        data_type = dct["__type__"]
        if data_type == "ComplexArray":
            return from_complex_pairs(dct["data"]).reshape(dct["shape"])
        if data_type == "DataFrame":
            return pd.DataFrame.from_dict(dct["data"], orient="tight")
        raise ValueError(f"未知的序列化类型: {data_type}")
    return dct


def complex_pairs(values) -> list:
    """把复数数组展平为 [[re, im], ...]"""
    flat = np.asarray(values, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def from_complex_pairs(pairs) -> np.ndarray:
    """[[re, im], ...] 还原为一维复数组"""
    array = np.asarray(pairs, dtype=float).reshape(-1, 2)
    return array[:, 0] + 1j * array[:, 1]


def dumps(obj, **kwargs) -> str:
    return json.dumps(obj, cls=UniversalEncoder, ensure_ascii=False, **kwargs)


def loads(text: str):
    return json.loads(text, object_hook=universal_decoder)
