"""
算子规格定义
𝒜 = A₀· + A₁⟨·⟩₁ + ... + A_N⟨·⟩_{1,N}，其中 A_j 只依赖 k_{j+1},...,k_N
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from expr import MatrixExpr, evaluate_array, parse_expr
from .linalg import hermitian_defect


# 被忽略坐标 k_1..k_j 的占位取值
DUMMY_COORD = 0.5

HERMITIAN_TOLERANCE = 1e-12


class Coefficient(ABC):
    """系数函数 A_j 的基类"""

    def __init__(self, level: int, n_vars: int, size: int):
        self.level = level
        self.n_vars = n_vars
        self.size = size

    @abstractmethod
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """
        在完整k点上求值

        Args:
            points: 形状 (..., N) 的k点，前 level 个坐标不参与计算

        Returns:
            形状 (..., M, M) 的复数组
        """
        pass

    @abstractmethod
    def to_dict(self) -> Any:
        """转换为规格文件中的一层"""
        pass

    def __repr__(self):
        return f"{self.__class__.__name__}(level={self.level}, M={self.size})"


class ExprCoefficient(Coefficient):
    """由表达式矩阵给出的系数"""

    def __init__(self, level: int, entries: List[List[MatrixExpr]]):
        size = len(entries)
        if size == 0 or any(len(row) != size for row in entries):
            raise ValueError(f"第 {level} 层系数必须是非空方阵")
        n_vars = entries[0][0].n_vars
        super().__init__(level, n_vars, size)
        self.entries = entries

    @classmethod
    def from_strings(cls, level: int, rows: Sequence[Sequence[str]], n_vars: int) -> "ExprCoefficient":
        return cls(level, [[parse_expr(str(text), n_vars) for text in row] for row in rows])

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        columns = [
            np.stack([evaluate_array(e, points) for e in row], axis=-1)
            for row in self.entries
        ]
        return np.stack(columns, axis=-2)

    def variables(self) -> set:
        used = set()
        for row in self.entries:
            for e in row:
                used |= set(e.variables)
        return used

    def to_dict(self) -> List[List[str]]:
        return [[e.to_source() for e in row] for row in self.entries]


class TabulatedCoefficient(Coefficient):
    """
    在 k_{j+1},...,k_N 的张量节点上列表给出的系数

    一维用三次样条插值，多维用线性网格插值；节点处精确复现表值。
    """

    def __init__(self, level: int, n_vars: int, axes: List[np.ndarray], values: np.ndarray):
        values = np.asarray(values, dtype=complex)
        size = values.shape[-1]
        super().__init__(level, n_vars, size)
        self.axes = [np.asarray(axis, dtype=float) for axis in axes]
        self.values = values
        if len(self.axes) != n_vars - level:
            raise ValueError(f"第 {level} 层表格应有 {n_vars - level} 个坐标轴，实际为 {len(self.axes)}")
        expected = tuple(len(axis) for axis in self.axes) + (size, size)
        if values.shape != expected:
            raise ValueError(f"第 {level} 层表格形状应为 {expected}，实际为 {values.shape}")
        self._interpolants = self._build_interpolants()

    def _build_interpolants(self):
        if not self.axes:
            return None
        if len(self.axes) == 1:
            axis = self.axes[0]
            return (CubicSpline(axis, self.values.real, axis=0, extrapolate=True),
                    CubicSpline(axis, self.values.imag, axis=0, extrapolate=True))
        return (RegularGridInterpolator(self.axes, self.values.real, bounds_error=False, fill_value=None),
                RegularGridInterpolator(self.axes, self.values.imag, bounds_error=False, fill_value=None))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        batch = points.shape[:-1]
        if self._interpolants is None:
            return np.array(np.broadcast_to(self.values, batch + self.values.shape))
        tail = points[..., self.level:]
        real, imag = self._interpolants
        if len(self.axes) == 1:
            coords = tail[..., 0]
        else:
            coords = tail.reshape(-1, tail.shape[-1])
        result = real(coords) + 1j * imag(coords)
        return np.asarray(result).reshape(batch + (self.size, self.size))

    def to_dict(self) -> Dict[str, Any]:
        flat = self.values.reshape(-1)
        return {
            "tabulated": {
                "axes": [axis.tolist() for axis in self.axes],
                "values": [[float(z.real), float(z.imag)] for z in flat],
            }
        }

    @classmethod
    def from_dict(cls, level: int, n_vars: int, size: int, data: Dict[str, Any]) -> "TabulatedCoefficient":
        table = data["tabulated"]
        axes = [np.asarray(axis, dtype=float) for axis in table["axes"]]
        pairs = np.asarray(table["values"], dtype=float).reshape(-1, 2)
        shape = tuple(len(axis) for axis in axes) + (size, size)
        values = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(shape)
        return cls(level, n_vars, axes, values)


@dataclass
class OperatorSpec:
    """算子规格 (N, M, {A_j})"""
    N: int
    M: int
    A: List[Coefficient]
    name: str = "operator"
    self_adjoint_hint: Optional[bool] = None
    _self_adjoint: Optional[bool] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"格点维数N必须 ≥ 1: {self.N}")
        if self.M < 1:
            raise ValueError(f"胞内节点数M必须 ≥ 1: {self.M}")
        if len(self.A) != self.N + 1:
            raise ValueError(f"需要 N+1={self.N + 1} 个系数，实际为 {len(self.A)}")
        for j, coefficient in enumerate(self.A):
            if coefficient.size != self.M:
                raise ValueError(f"第 {j} 层系数尺寸 {coefficient.size} 与 M={self.M} 不一致")
        self.logger = logging.getLogger(f"OperatorSpec.{self.name}")

    @classmethod
    def from_strings(cls, N: int, rows_per_level: Sequence[Sequence[Sequence[str]]], **kwargs) -> "OperatorSpec":
        """由每层的表达式字符串矩阵构建"""
        coefficients = [
            ExprCoefficient.from_strings(j, rows, N) for j, rows in enumerate(rows_per_level)
        ]
        return cls(N, coefficients[0].size, coefficients, **kwargs)

    # ==================== 求值 ====================
    def evaluate(self, level: int, points: np.ndarray) -> np.ndarray:
        return self.A[level].evaluate(points)

    def evaluate_tail(self, level: int, tail: np.ndarray) -> np.ndarray:
        """在尾部坐标 (k_{level+1},...,k_N) 上求值，前面的坐标用占位值填充"""
        tail = np.asarray(tail, dtype=float)
        head = np.full(tail.shape[:-1] + (level,), DUMMY_COORD)
        return self.A[level].evaluate(np.concatenate([head, tail], axis=-1))

    @property
    def is_scalar(self) -> bool:
        return self.M == 1

    # ==================== 探测 ====================
    def probe_points(self, count: int = 24, seed: int = 12345) -> np.ndarray:
        """确定性的探测点：均匀网格加随机点"""
        rng = np.random.default_rng(seed)
        axis = np.linspace(0.1, 0.9, 5)
        mesh = np.stack(np.meshgrid(*([axis] * self.N), indexing="ij"), axis=-1).reshape(-1, self.N)
        return np.concatenate([mesh, rng.uniform(0.0, 1.0, size=(count, self.N))], axis=0)

    def check_dependence(self, tolerance: float = 1e-12) -> List[str]:
        """
        依赖规则探测：A_j 在只相差前 j 个坐标的两点处取值必须相同

        Returns:
            违规描述列表，空列表表示通过
        """
        errors = []
        rng = np.random.default_rng(2024)
        base = self.probe_points()
        for j in range(1, self.N + 1):
            moved = base.copy()
            moved[:, :j] = rng.uniform(0.0, 1.0, size=(len(base), j))
            try:
                difference = np.max(np.abs(self.evaluate(j, base) - self.evaluate(j, moved)))
            except ValueError as exc:
                errors.append(f"A_{j} 探测求值失败: {exc}")
                continue
            if difference > tolerance:
                errors.append(
                    f"A_{j} 依赖了 k_1..k_{j} (偏差 {difference:.3e})，"
                    f"违反规则: A_j 只能依赖 k_{j + 1},...,k_N"
                )
        return errors

    def hermitian_defects(self) -> List[float]:
        points = self.probe_points()
        defects = []
        for j in range(self.N + 1):
            values = self.evaluate(j, points)
            defects.append(max(hermitian_defect(matrix) for matrix in values))
        return defects

    @property
    def self_adjoint(self) -> bool:
        """所有 A_j 在探测网格上的Hermite偏差都小于1e-12"""
        if self._self_adjoint is None:
            self._self_adjoint = all(d < HERMITIAN_TOLERANCE for d in self.hermitian_defects())
            if self.self_adjoint_hint is not None and self.self_adjoint_hint != self._self_adjoint:
                self.logger.warning(
                    f"self_adjoint_hint={self.self_adjoint_hint} 与数值探测结果 {self._self_adjoint} 不一致"
                )
        return self._self_adjoint

    def max_norms(self) -> List[float]:
        """每层系数在探测点上的最大谱范数"""
        points = self.probe_points()
        return [float(np.max(np.linalg.norm(self.evaluate(j, points), ord=2, axis=(-2, -1))))
                for j in range(self.N + 1)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "M": self.M,
            "A": [coefficient.to_dict() for coefficient in self.A],
            "self_adjoint_hint": self.self_adjoint_hint if self.self_adjoint_hint is not None else self.self_adjoint,
        }

    def __repr__(self):
        return f"OperatorSpec(name={self.name!r}, N={self.N}, M={self.M})"
