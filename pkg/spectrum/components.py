"""
谱分量数据结构：色散分支、谱分量、区间运算
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd


Interval = Tuple[float, float]


# ==================== 区间运算 ====================
def merge_intervals(intervals: Sequence[Interval], gap: float = 0.0) -> List[Interval]:
    """合并重叠（或间距不超过gap）的闭区间"""
    ordered = sorted((float(a), float(b)) for a, b in intervals if a <= b)
    merged: List[Interval] = []
    for a, b in ordered:
        if merged and a <= merged[-1][1] + gap:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def inflate(intervals: Sequence[Interval], margin: float) -> List[Interval]:
    return merge_intervals([(a - margin, b + margin) for a, b in intervals])


def complement_in_window(window: Interval, excluded: Sequence[Interval]) -> List[Interval]:
    """窗口中去掉排除集后剩下的闭区间"""
    lo, hi = window
    allowed: List[Interval] = []
    cursor = lo
    for a, b in merge_intervals(excluded):
        if b < lo or a > hi:
            continue
        if a > cursor:
            allowed.append((cursor, min(a, hi)))
        cursor = max(cursor, b)
    if cursor < hi:
        allowed.append((cursor, hi))
    return [(a, b) for a, b in allowed if b > a]


def distance_to_intervals(x: float, intervals: Sequence[Interval]) -> float:
    """点到区间并的距离，落在区间内为0"""
    if not intervals:
        return float("inf")
    best = float("inf")
    for a, b in intervals:
        if a <= x <= b:
            return 0.0
        best = min(best, a - x if x < a else x - b)
    return best


# ==================== 数据结构 ====================
@dataclass
class RootRecord:
    """单个k点上找到的一个根及其来源"""
    lam: complex
    interval: Interval
    bracket: Interval
    residual: float
    method: str
    margin: float = float("inf")


@dataclass
class DispersionBranch:
    """
    第 j 层的一条色散分支

    values[i] 为 k_grid[i] 处的λ，分支在该点不存在时为 NaN。
    """
    level: int
    k_grid: np.ndarray
    values: np.ndarray
    method: str

    def valid(self) -> np.ndarray:
        return np.isfinite(self.values)

    def range(self) -> Optional[Interval]:
        real = np.real(self.values[self.valid()])
        if real.size == 0:
            return None
        return float(real.min()), float(real.max())

    def to_frame(self, branch_index: int) -> pd.DataFrame:
        mask = self.valid()
        columns: Dict[str, Any] = {}
        for axis in range(self.k_grid.shape[1]):
            columns[f"k{self.level + axis + 1}"] = self.k_grid[mask, axis]
        columns["level"] = self.level
        columns["branch"] = branch_index
        columns["lambda"] = self.values[mask]
        return pd.DataFrame(columns)

    def __repr__(self):
        return f"DispersionBranch(level={self.level}, points={int(self.valid().sum())}, method={self.method})"


@dataclass
class SpectralComponent:
    """
    谱分量 σ_j

    自伴情形 hull 为闭区间并；一般情形 points 保存复平面上的采样点云。
    margin 为与内层投影的最小距离（不相交性元数据）。
    """
    level: int
    branches: List[DispersionBranch]
    hull: List[Interval] = field(default_factory=list)
    points: Optional[np.ndarray] = None
    margin: float = float("inf")
    real: bool = True
    dropped: int = 0
    # 网格分辨率：相邻k点间取值的最大变化
    resolution: float = 0.0

    def eigenvalues(self) -> List[float]:
        """σ_N 的孤立特征值（退化区间的端点）"""
        return [a for a, b in self.hull if a == b]

    def to_frame(self) -> pd.DataFrame:
        frames = [branch.to_frame(index) for index, branch in enumerate(self.branches)]
        frames = [frame for frame in frames if len(frame)]
        if not frames:
            return pd.DataFrame({"level": [], "branch": [], "lambda": []})
        return pd.concat(frames, ignore_index=True)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "hull": [[a, b] for a, b in self.hull],
            "branches": len(self.branches),
            "margin": self.margin,
            "real": self.real,
            "dropped_points": self.dropped,
            "resolution": self.resolution,
        }

    def __repr__(self):
        return f"SpectralComponent(level={self.level}, hull={self.hull})"


def hull_from_branches(branches: Sequence[DispersionBranch]) -> List[Interval]:
    """分支取值范围的闭包（区间并）"""
    ranges = [branch.range() for branch in branches]
    return merge_intervals([r for r in ranges if r is not None])
