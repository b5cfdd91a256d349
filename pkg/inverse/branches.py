"""
色散分支规格与不相交条件检查
λ_j(k_j) ∉ ∪_{r<j} λ_r([0,1]^{j−r}, k_j)，留有边界 δ
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from core.operator import DUMMY_COORD
from expr import MatrixExpr, evaluate_array, parse_expr


logger = logging.getLogger(__name__)

DEFAULT_DELTA = 1e-6
DEFAULT_PROBE_POINTS = 64
IMAGINARY_TOLERANCE = 1e-12


@dataclass
class BranchSpec:
    """
    N+1 个实值分支 λ_0..λ_N，λ_j 只依赖 k_{j+1},...,k_N（λ_N 为常数）

    candidates 为可选的 A_j 闭式候选，用于合成后的比对。
    """
    N: int
    branches: List[MatrixExpr]
    name: str = "branches"
    candidates: Dict[int, MatrixExpr] = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"分支规格需要 N ≥ 1: {self.N}")
        if len(self.branches) != self.N + 1:
            raise ValueError(f"需要 N+1={self.N + 1} 个分支，实际为 {len(self.branches)}")
        for j, branch in enumerate(self.branches):
            if branch.n_vars != self.N:
                raise ValueError(f"λ_{j} 的变量数 {branch.n_vars} 与 N={self.N} 不一致")

    @classmethod
    def from_strings(cls, branches: Sequence[str], name: str = "branches",
                     candidates: Optional[Dict[int, str]] = None) -> "BranchSpec":
        N = len(branches) - 1
        if N < 1:
            raise ValueError(f"分支规格需要 N ≥ 1: {N}")
        parsed = [parse_expr(str(text), N) for text in branches]
        parsed_candidates = {int(j): parse_expr(str(text), N) for j, text in (candidates or {}).items()}
        return cls(N, parsed, name=name, candidates=parsed_candidates)

    def evaluate(self, j: int, tail: np.ndarray) -> np.ndarray:
        """λ_j 在尾部点 (P, N−j) 上的实数值"""
        tail = np.asarray(tail, dtype=float).reshape(-1, self.N - j)
        head = np.full((len(tail), j), DUMMY_COORD)
        values = evaluate_array(self.branches[j], np.concatenate([head, tail], axis=1))
        if np.max(np.abs(values.imag), initial=0.0) > IMAGINARY_TOLERANCE:
            raise ValueError(f"λ_{j} 必须是实值函数")
        return values.real

    def check_dependence(self, tolerance: float = 1e-12) -> List[str]:
        """λ_j 不得依赖 k_1..k_j"""
        errors = []
        for j, branch in enumerate(self.branches):
            illegal = sorted(index for index in branch.variables if index <= j)
            if illegal:
                names = ", ".join(f"k{index}" for index in illegal)
                errors.append(f"λ_{j} 依赖了 {names}，只能依赖 k_{j + 1},...,k_N")
        return errors

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"N": self.N, "branches": [b.to_source() for b in self.branches]}
        if self.candidates:
            data["candidates"] = {str(j): e.to_source() for j, e in self.candidates.items()}
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], name: str = "branches") -> "BranchSpec":
        branches = data.get("branches")
        if not isinstance(branches, list):
            raise ValueError("分支文件缺少 branches 列表")
        spec = cls.from_strings(branches, name=name, candidates=data.get("candidates"))
        if "N" in data and int(data["N"]) != spec.N:
            raise ValueError(f"N={data['N']} 与分支个数 {len(branches)} 不一致")
        return spec

    def __repr__(self):
        return f"BranchSpec(name={self.name!r}, N={self.N})"


@dataclass
class BranchReport:
    """不相交条件检查结果"""
    passed: bool
    delta: float
    min_distance: Dict[int, float]
    continuity: Dict[int, float]
    offending: List[Dict[str, Any]]
    errors: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "delta": self.delta,
            "min_distance": {str(j): d for j, d in self.min_distance.items()},
            "continuity": {str(j): c for j, c in self.continuity.items()},
            "offending": self.offending,
            "errors": self.errors,
        }


def probe_tails(points_per_axis: int, dims: int) -> np.ndarray:
    """端点包含的探测网格，列顺序 (k_{j+1}, ..., k_N)"""
    if dims == 0:
        return np.zeros((1, 0))
    axis = np.linspace(0.0, 1.0, points_per_axis)
    return np.stack(np.meshgrid(*([axis] * dims), indexing="ij"), axis=-1).reshape(-1, dims)


def _max_jump(values: np.ndarray, points_per_axis: int, dims: int) -> float:
    if dims == 0 or values.size < 2:
        return 0.0
    grid = values.reshape((points_per_axis,) * dims)
    return float(max(np.max(np.abs(np.diff(grid, axis=axis))) for axis in range(dims)))


def validate_branches(b: BranchSpec, probe_grid: int = DEFAULT_PROBE_POINTS,
                      delta: float = DEFAULT_DELTA) -> BranchReport:
    """
    检查每个 λ_j 与内层投影的距离

    Args:
        b: 分支规格
        probe_grid: 每轴探测点数
        delta: 边界 δ

    Returns:
        BranchReport；通过当且仅当每层最小距离都大于 δ
    """
    errors = b.check_dependence()
    if errors:
        return BranchReport(False, delta, {}, {}, [], errors)

    G = probe_grid
    N = b.N
    min_distance: Dict[int, float] = {}
    continuity: Dict[int, float] = {}
    offending: List[Dict[str, Any]] = []

    for j in range(N + 1):
        tails = probe_tails(G, N - j)
        values = b.evaluate(j, tails)
        continuity[j] = _max_jump(values, G, N - j)
        if j == 0:
            continue
        distance = np.full(len(tails), np.inf)
        for r in range(j):
            inner = probe_tails(G, j - r)
            # (P_tail, P_inner) 个点：前 j−r 个坐标走内层网格，其余为尾部
            points = np.concatenate([
                np.repeat(inner[None], len(tails), axis=0),
                np.repeat(tails[:, None, :], len(inner), axis=1),
            ], axis=-1)
            projected = b.evaluate(r, points.reshape(-1, N - r)).reshape(len(tails), len(inner))
            lo, hi = projected.min(axis=1), projected.max(axis=1)
            gap = np.maximum(np.maximum(lo - values, values - hi), 0.0)
            distance = np.minimum(distance, gap)
        min_distance[j] = float(distance.min())
        for index in np.flatnonzero(distance <= delta):
            offending.append({
                "level": j,
                "k": tails[index].tolist(),
                "lambda": float(values[index]),
                "distance": float(distance[index]),
            })

    passed = not offending
    if passed:
        logger.info(f"{b.name}: 分支条件通过, 最小距离 {min_distance}")
    else:
        logger.warning(f"{b.name}: 分支条件不满足, {len(offending)} 个违规k点")
    return BranchReport(passed, delta, min_distance, continuity, offending)
