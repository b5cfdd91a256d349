"""
规格文件格式定义
算子规格 {"N", "M", "A", "self_adjoint_hint"} 与分支规格 {"N", "branches", "candidates"}
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from core import json_helper
from core.errors import SpecValidationError
from core.operator import Coefficient, ExprCoefficient, OperatorSpec, TabulatedCoefficient
from inverse import BranchSpec


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _read_json(path: PathLike) -> Dict[str, Any]:
    """读取JSON，解析失败时带上行列位置"""
    path = str(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise SpecValidationError(path, ["文件不存在"])
    except json.JSONDecodeError as exc:
        raise SpecValidationError(path, [f"JSON格式错误 (行 {exc.lineno}, 列 {exc.colno}): {exc.msg}"])
    if not isinstance(data, dict):
        raise SpecValidationError(path, ["顶层必须是JSON对象"])
    return data


def _is_tabulated(level_data: Any) -> bool:
    return isinstance(level_data, dict) and "tabulated" in level_data


@dataclass
class SpecFile:
    """
    算子规格文件

    A 的每一层是 M×M 的表达式字符串矩阵，或 {"tabulated": {"axes", "values"}}。
    """
    N: int
    M: int
    A: List[Any]
    self_adjoint_hint: Optional[bool] = None
    path: str = "<memory>"
    name: str = "operator"
    errors: List[str] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "<memory>", name: Optional[str] = None) -> "SpecFile":
        """
        结构校验，不解析表达式

        Raises:
            SpecValidationError: 字段缺失或形状不符
        """
        errors = []
        N, M, A = data.get("N"), data.get("M"), data.get("A")
        if not isinstance(N, int) or isinstance(N, bool) or N < 1:
            errors.append(f"N 必须是 ≥ 1 的整数: {N!r}")
        if not isinstance(M, int) or isinstance(M, bool) or M < 1:
            errors.append(f"M 必须是 ≥ 1 的整数: {M!r}")
        if not isinstance(A, list):
            errors.append("缺少系数列表 A")
        if errors:
            raise SpecValidationError(path, errors)

        if len(A) != N + 1:
            errors.append(f"A 需要 N+1={N + 1} 层，实际为 {len(A)}")
        for j, level_data in enumerate(A):
            if _is_tabulated(level_data):
                continue
            if not isinstance(level_data, list) or len(level_data) != M \
                    or any(not isinstance(row, list) or len(row) != M for row in level_data):
                errors.append(f"A_{j} 必须是 {M}×{M} 的表达式矩阵")
                continue
            for p, row in enumerate(level_data):
                for q, entry in enumerate(row):
                    if not isinstance(entry, (str, int, float)) or isinstance(entry, bool):
                        errors.append(f"A_{j}[{p}][{q}] 必须是表达式字符串: {entry!r}")

        hint = data.get("self_adjoint_hint")
        if hint is not None and not isinstance(hint, bool):
            errors.append(f"self_adjoint_hint 必须是布尔值: {hint!r}")
        if errors:
            raise SpecValidationError(path, errors)
        return cls(N, M, A, hint, path, name or Path(path).stem or "operator")

    @classmethod
    def load(cls, path: PathLike) -> "SpecFile":
        return cls.from_dict(_read_json(path), str(path))

    def to_operator(self) -> OperatorSpec:
        """
        解析表达式并构建 OperatorSpec

        Raises:
            SpecValidationError: 表达式语法错误或表格形状不符
        """
        coefficients: List[Coefficient] = []
        errors = []
        for j, level_data in enumerate(self.A):
            try:
                if _is_tabulated(level_data):
                    coefficients.append(TabulatedCoefficient.from_dict(j, self.N, self.M, level_data))
                else:
                    rows = [[str(entry) for entry in row] for row in level_data]
                    coefficients.append(ExprCoefficient.from_strings(j, rows, self.N))
            except (ValueError, KeyError, TypeError) as exc:
                errors.append(f"A_{j}: {exc}")
        if errors:
            raise SpecValidationError(self.path, errors)
        try:
            return OperatorSpec(self.N, self.M, coefficients, name=self.name,
                                self_adjoint_hint=self.self_adjoint_hint)
        except ValueError as exc:
            raise SpecValidationError(self.path, [str(exc)])

    @classmethod
    def from_operator(cls, spec: OperatorSpec) -> "SpecFile":
        data = spec.to_dict()
        return cls(data["N"], data["M"], data["A"], data["self_adjoint_hint"], name=spec.name)

    def to_dict(self) -> Dict[str, Any]:
        return {"N": self.N, "M": self.M, "A": self.A, "self_adjoint_hint": self.self_adjoint_hint}

    def save(self, path: PathLike):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(json_helper.dumps(self.to_dict(), indent=2))
        logger.info(f"规格已写入 {path}")

    def __repr__(self):
        return f"SpecFile(path={self.path!r}, N={self.N}, M={self.M})"


def load_spec(path: PathLike) -> OperatorSpec:
    """读取算子规格文件并构建 OperatorSpec"""
    return SpecFile.load(path).to_operator()


def save_spec(spec: OperatorSpec, path: PathLike):
    SpecFile.from_operator(spec).save(path)


def load_branches(path: PathLike) -> BranchSpec:
    """
    读取分支规格文件

    Raises:
        SpecValidationError: JSON错误、表达式错误或 N < 1
    """
    data = _read_json(path)
    try:
        return BranchSpec.from_dict(data, name=Path(str(path)).stem or "branches")
    except (ValueError, TypeError) as exc:
        raise SpecValidationError(str(path), [str(exc)])
