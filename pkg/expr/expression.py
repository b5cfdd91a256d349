"""
MatrixExpr：系数矩阵单个元素的表达式
"""

import numpy as np
from dataclasses import dataclass, field
from typing import FrozenSet, Sequence

from core.errors import ExprEvaluationError
from .evaluator import evaluate_node, fold_constants
from .nodes import Node, to_source, variables_in


@dataclass(frozen=True)
class MatrixExpr:
    """解析后的表达式，不可变，可在多线程中并发求值"""
    root: Node
    n_vars: int
    source: str = ""
    folded: Node = field(init=False, repr=False, compare=False)
    variables: FrozenSet[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_vars < 0:
            raise ValueError(f"变量个数不能为负: {self.n_vars}")
        used = variables_in(self.root)
        bad = [m for m in used if m < 1 or m > self.n_vars]
        if bad:
            raise ValueError(f"变量下标越界: k{bad[0]} (n_vars={self.n_vars})")
        object.__setattr__(self, "variables", used)
        object.__setattr__(self, "folded", fold_constants(self.root))

    def to_source(self) -> str:
        return to_source(self.root)

    def is_constant(self) -> bool:
        return not self.variables

    def __repr__(self):
        return f"MatrixExpr({self.to_source()!r}, n_vars={self.n_vars})"


def evaluate_array(e: MatrixExpr, coords: np.ndarray) -> np.ndarray:
    """
    向量化求值

    Args:
        e: 表达式
        coords: 形状 (..., n_vars) 的k点数组

    Returns:
        形状为 coords.shape[:-1] 的复数组

    Raises:
        ExprEvaluationError: 除零、ln奇异或结果非有限
    """
    coords = np.asarray(coords, dtype=float)
    if coords.shape[-1] != e.n_vars:
        raise ValueError(f"k点维数 {coords.shape[-1]} 与变量个数 {e.n_vars} 不一致")
    with np.errstate(all="ignore"):
        value = evaluate_node(e.folded, coords)
    result = np.array(np.broadcast_to(value, coords.shape[:-1]), dtype=complex)
    if not np.all(np.isfinite(result)):
        raise ExprEvaluationError("求值结果不是有限数", e.root.span)
    return result


def depends_on(e: MatrixExpr) -> FrozenSet[int]:
    """表达式实际用到的变量下标集合（1 起）"""
    return e.variables


def eval_expr(e: MatrixExpr, k: Sequence[float]) -> complex:
    """在单个k点上求值，k的每个坐标须在[0,1]内"""
    point = np.asarray(k, dtype=float)
    if point.shape != (e.n_vars,):
        raise ValueError(f"k点应有 {e.n_vars} 个坐标，实际为 {point.shape}")
    if np.any(point < 0) or np.any(point > 1):
        raise ValueError(f"k点坐标须在[0,1]内: {tuple(point)}")
    return complex(evaluate_array(e, point))
