"""
求积节点上的向量值函数
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from core.json_helper import complex_pairs, from_complex_pairs
from core.quadrature import QuadGrid
from expr import MatrixExpr, evaluate_array


@dataclass
class GridFunction:
    """
    u ∈ L²([0,1]^N, ℂ^M) 在张量求积节点上的取值

    values 形状为 (Q,)*N + (M,)，网格轴顺序为 (k_N, ..., k_1)，
    与引擎的细网格一致，展平后 k_1 变化最快。
    """
    values: np.ndarray
    grid: QuadGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim < 2:
            raise ValueError(f"网格函数至少需要一个网格轴和一个分量轴: {self.values.shape}")
        if any(n != self.grid.Q for n in self.values.shape[:-1]):
            raise ValueError(f"网格轴长度 {self.values.shape[:-1]} 与节点数 {self.grid.Q} 不一致")

    @property
    def dims(self) -> int:
        return self.values.ndim - 1

    @property
    def M(self) -> int:
        return self.values.shape[-1]

    @property
    def Q(self) -> int:
        return self.grid.Q

    # ==================== 构造 ====================
    @classmethod
    def from_callable(cls, func, dims: int, grid: QuadGrid) -> "GridFunction":
        """func 接受 (..., N) 的k点（自然顺序 k_1..k_N），返回 (..., M)"""
        values = np.asarray(func(grid.tensor_points(dims)), dtype=complex)
        return cls(values, grid)

    @classmethod
    def constant(cls, value: Sequence[complex], dims: int, grid: QuadGrid) -> "GridFunction":
        vector = np.atleast_1d(np.asarray(value, dtype=complex))
        return cls(np.broadcast_to(vector, (grid.Q,) * dims + vector.shape).copy(), grid)

    @classmethod
    def from_expressions(cls, expressions: Sequence[MatrixExpr], grid: QuadGrid) -> "GridFunction":
        """每个分量一个表达式"""
        if not expressions:
            raise ValueError("源表达式列表为空")
        dims = expressions[0].n_vars
        points = grid.tensor_points(dims)
        return cls(np.stack([evaluate_array(e, points) for e in expressions], axis=-1), grid)

    @classmethod
    def lattice_site(cls, cell: Sequence[int], node: int, M: int, grid: QuadGrid) -> "GridFunction":
        """格点 (n, p) 的源：e^{2πi n·k} e_p"""
        cell = np.asarray(cell, dtype=float)
        if not 0 <= node < M:
            raise ValueError(f"胞内节点编号必须在 [0, {M}) 内: {node}")
        points = grid.tensor_points(len(cell))
        phase = np.exp(2j * np.pi * (points @ cell))
        values = np.zeros(phase.shape + (M,), dtype=complex)
        values[..., node] = phase
        return cls(values, grid)

    @classmethod
    def random(cls, dims: int, M: int, grid: QuadGrid, seed: int = 0) -> "GridFunction":
        rng = np.random.default_rng(seed)
        shape = (grid.Q,) * dims + (M,)
        return cls(rng.standard_normal(shape) + 1j * rng.standard_normal(shape), grid)

    # ==================== 运算 ====================
    def _check(self, other: "GridFunction"):
        if self.values.shape != other.values.shape or self.grid != other.grid:
            raise ValueError(f"网格函数形状不一致: {self.values.shape} vs {other.values.shape}")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.values + other.values, self.grid)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.values - other.values, self.grid)

    def __mul__(self, scalar: complex) -> "GridFunction":
        return GridFunction(self.values * scalar, self.grid)

    __rmul__ = __mul__

    def mean(self, count: int) -> np.ndarray:
        """⟨u⟩_{1..count}，形状 (Q,)*(N−count) + (M,)"""
        values = self.values
        for _ in range(count):
            values = self.grid.average(values, axis=-2)
        return values

    def inner(self, other: "GridFunction") -> complex:
        """⟨u, v⟩ = ∫ u(k)* v(k) dk"""
        self._check(other)
        return complex(self._integrate(np.sum(np.conj(self.values) * other.values, axis=-1)))

    def _integrate(self, values: np.ndarray) -> complex:
        for _ in range(self.dims):
            values = self.grid.average(values, axis=-1)
        return complex(values)

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    # ==================== 序列化 ====================
    def to_dict(self) -> Dict[str, Any]:
        return {
            "dims": self.dims,
            "M": self.M,
            "Q": self.Q,
            "values": complex_pairs(self.values),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridFunction":
        grid = QuadGrid(int(data["Q"]))
        shape = (grid.Q,) * int(data["dims"]) + (int(data["M"]),)
        return cls(from_complex_pairs(data["values"]).reshape(shape), grid)

    def to_frame(self, limit: Optional[int] = None) -> pd.DataFrame:
        """逐节点采样表：k_1..k_N、分量号、取值"""
        points = self.grid.tensor_points(self.dims).reshape(-1, self.dims)
        flat = self.values.reshape(-1, self.M)
        if limit is not None:
            points, flat = points[:limit], flat[:limit]
        frames = []
        for component in range(self.M):
            columns = {f"k{i + 1}": points[:, i] for i in range(self.dims)}
            columns["component"] = component
            columns["value"] = flat[:, component]
            frames.append(pd.DataFrame(columns))
        return pd.concat(frames, ignore_index=True)

    def __repr__(self):
        return f"GridFunction(dims={self.dims}, M={self.M}, Q={self.Q})"
