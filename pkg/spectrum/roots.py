"""
一维求根与极值细化工具
"""

from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar


def sign_change_brackets(lams: np.ndarray, values: np.ndarray, valid: np.ndarray) -> List[Tuple[int, int]]:
    """相邻有效采样点之间实值函数变号的位置"""
    brackets = []
    for i in range(len(lams) - 1):
        if not (valid[i] and valid[i + 1]):
            continue
        a, b = values[i], values[i + 1]
        if a == 0.0:
            brackets.append((i, i))
        elif a * b < 0.0:
            brackets.append((i, i + 1))
    if len(lams) and valid[-1] and values[-1] == 0.0:
        brackets.append((len(lams) - 1, len(lams) - 1))
    return brackets


def local_minima(magnitudes: np.ndarray, valid: np.ndarray) -> List[int]:
    """有效采样中 |det| 的严格局部极小（两侧都有效的内点）"""
    found = []
    for i in range(1, len(magnitudes) - 1):
        if valid[i - 1] and valid[i] and valid[i + 1]:
            if magnitudes[i] <= magnitudes[i - 1] and magnitudes[i] < magnitudes[i + 1]:
                found.append(i)
    return found


def polish_bisection(func: Callable[[float], float], a: float, b: float, xtol: float = 1e-14) -> float:
    """变号区间上的 Brent 求根"""
    if a == b:
        return a
    return float(brentq(func, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))


def polish_minimum(func: Callable[[float], float], a: float, b: float, xatol: float = 1e-14) -> Tuple[float, float]:
    """有界极小化 |det|，返回 (位置, 极小值)"""
    result = minimize_scalar(func, bounds=(a, b), method="bounded", options={"xatol": xatol, "maxiter": 500})
    return float(result.x), float(result.fun)


def winding_number(func: Callable[[np.ndarray], np.ndarray], center: complex, radius: float,
                   samples: int = 64) -> int:
    """
    辐角原理：func 在圆周上的绕数即圆内零点个数

    func 接受复数组并返回同形状的复数组。
    """
    theta = np.linspace(0.0, 2.0 * np.pi, samples + 1)
    values = np.asarray(func(center + radius * np.exp(1j * theta)), dtype=complex)
    if not np.all(np.isfinite(values)) or np.any(values == 0):
        return -1
    phase = np.unwrap(np.angle(values))
    return int(round((phase[-1] - phase[0]) / (2.0 * np.pi)))


def refine_extremum(func: Callable[[float], float], lo: float, hi: float, maximize: bool = False) -> float:
    """在 [lo, hi] 上细化一维函数的极值，返回极值本身"""
    if hi <= lo:
        return float(func(lo))
    sign = -1.0 if maximize else 1.0
    result = minimize_scalar(lambda x: sign * func(x), bounds=(lo, hi), method="bounded",
                             options={"xatol": 1e-12})
    candidates = [float(func(lo)), float(func(hi)), sign * float(result.fun)]
    return max(candidates) if maximize else min(candidates)


def link_branches(roots_per_point: Sequence[np.ndarray], jump: float) -> List[np.ndarray]:
    """
    沿一维k网格连接相邻点的根，形成连续分支

    相邻两点的根按距离从小到大贪心配对，距离超过 jump 的不配对；
    出现的新根开启新分支，消失的根结束分支。

    Returns:
        分支列表，每条为长度 K 的数组，分支不存在处为 NaN
    """
    K = len(roots_per_point)
    dtype = complex if any(np.iscomplexobj(r) for r in roots_per_point) else float
    branches: List[np.ndarray] = []
    active: List[Tuple[int, complex]] = []  # (分支号, 上一点的根)
    for i, roots in enumerate(roots_per_point):
        roots = np.asarray(roots).reshape(-1)
        pairs = sorted(
            (abs(roots[b] - last), a_index, b)
            for a_index, (_, last) in enumerate(active)
            for b in range(len(roots))
        )
        used_active, used_root = set(), set()
        next_active: List[Tuple[int, complex]] = []
        for distance, a_index, b in pairs:
            if distance > jump or a_index in used_active or b in used_root:
                continue
            used_active.add(a_index)
            used_root.add(b)
            branch_id = active[a_index][0]
            branches[branch_id][i] = roots[b]
            next_active.append((branch_id, roots[b]))
        for b in range(len(roots)):
            if b in used_root:
                continue
            values = np.full(K, np.nan, dtype=dtype)
            values[i] = roots[b]
            branches.append(values)
            next_active.append((len(branches) - 1, roots[b]))
        active = next_active
    return branches


def split_by_index(roots_per_point: Sequence[np.ndarray]) -> List[np.ndarray]:
    """多维k网格：按排序后的根序号划分分支"""
    K = len(roots_per_point)
    width = max((len(r) for r in roots_per_point), default=0)
    dtype = complex if any(np.iscomplexobj(r) for r in roots_per_point) else float
    branches = [np.full(K, np.nan, dtype=dtype) for _ in range(width)]
    for i, roots in enumerate(roots_per_point):
        for b, value in enumerate(np.asarray(roots).reshape(-1)):
            branches[b][i] = value
    return branches

