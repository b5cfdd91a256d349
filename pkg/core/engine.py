"""
矩阵值积分连分式引擎
F₀ = A₀ − λI，F_j = A_j + ⟨F_{j−1}⁻¹⟩_j⁻¹
G_j = I + ⟨F_{j−1}⁻¹⟩_j A_j，Ḡ_j = I + A_j ⟨F_{j−1}⁻¹⟩_j
D_j = (G₀…G_j)⁻¹，H_{j+1} = (Ḡ_j…Ḡ₀)⁻¹

所有数组在 λ 与尾部坐标 k_tail 上批量计算。第 r 层的量定义在
(k_level, ..., k_{r+1}) 的积分子网格上，网格轴排在 (L, K) 之后、(M, M) 之前，
k_1 总是最后一个网格轴。
"""

import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import QuadratureMarginError, SpectralProximityError
from .linalg import RCOND_THRESHOLD, batched_det, batched_inverse
from .operator import DUMMY_COORD, OperatorSpec
from .quadrature import QuadGrid


_COEFFICIENT_CACHE_SIZE = 16

# λ与内层投影的最小允许距离
DEFAULT_DELTA = 1e-6


@dataclass
class CFState:
    """
    连分式栈在一批 (λ, k_tail) 上的取值

    F[r], G[r], Gbar[r], mean_inv[r] 形状为 (L, K) + (Q,)*(level−r) + (M, M)；
    D[r] 与 H[r] 定义在完整细网格 (L, K) + (Q,)*level + (M, M) 上。
    mean_inv[0] 与 H[0] 为 None。
    """
    lam: np.ndarray
    k_tail: np.ndarray
    level: int
    F: List[np.ndarray]
    mean_inv: List[Optional[np.ndarray]]
    G: List[np.ndarray]
    Gbar: List[np.ndarray]
    D: List[np.ndarray] = field(default_factory=list)
    H: List[Optional[np.ndarray]] = field(default_factory=list)
    rcond: Optional[np.ndarray] = None
    rcond_level: Optional[np.ndarray] = None
    margin: Optional[np.ndarray] = None
    margin_level: Optional[np.ndarray] = None

    @property
    def rcond_min(self) -> float:
        return float(np.min(self.rcond)) if self.rcond is not None and self.rcond.size else float("inf")

    @property
    def margin_min(self) -> float:
        return float(np.min(self.margin)) if self.margin is not None and self.margin.size else float("inf")

    @property
    def has_kernels(self) -> bool:
        return bool(self.D)

    def det_G(self, r: Optional[int] = None) -> np.ndarray:
        """det G_r，默认取顶层"""
        return batched_det(self.G[self.level if r is None else r])

    def det_Gbar(self, r: Optional[int] = None) -> np.ndarray:
        return batched_det(self.Gbar[self.level if r is None else r])

    def valid_mask(self, threshold: float = RCOND_THRESHOLD, delta: float = 0.0) -> np.ndarray:
        """内层矩阵均未数值奇异、且（若已计算）距内层投影不小于 delta 的 (λ, k) 位置"""
        mask = self.rcond >= threshold
        if self.margin is not None:
            mask &= self.margin >= delta
        return mask

    def __repr__(self):
        return (f"CFState(level={self.level}, L={len(self.lam)}, K={len(self.k_tail)}, "
                f"rcond_min={self.rcond_min:.3e})")


@dataclass
class ECDState:
    """
    不经过连分式的独立递推 E_j, C_j, D_j, H_j

    全部定义在细网格上，E[j] 与 mean_D[j] = ⟨D_j⟩_{1..j} 定义在子网格上。
    """
    lam: np.ndarray
    k_tail: np.ndarray
    level: int
    C: List[np.ndarray]
    E: List[np.ndarray]
    D: List[np.ndarray]
    H: List[Optional[np.ndarray]]
    mean_D: List[np.ndarray]
    rcond: np.ndarray
    margin: Optional[np.ndarray] = None
    margin_level: Optional[np.ndarray] = None

    @property
    def rcond_min(self) -> float:
        return float(np.min(self.rcond)) if self.rcond.size else float("inf")

    @property
    def margin_min(self) -> float:
        return float(np.min(self.margin)) if self.margin is not None and self.margin.size else float("inf")


def expand_to_fine(values: np.ndarray, missing_axes: int) -> np.ndarray:
    """在 (M, M) 之前补 missing_axes 个单例网格轴，使子网格量能在细网格上广播"""
    if missing_axes == 0:
        return values
    return values.reshape(values.shape[:-2] + (1,) * missing_axes + values.shape[-2:])


def average_inner(values: np.ndarray, grid: QuadGrid, count: int) -> np.ndarray:
    """⟨·⟩_{1..count}：依次对 k_1, k_2, ... 积分（k_1 最内层）"""
    for _ in range(count):
        values = grid.average(values, axis=-3)
    return values


class ContinuedFractionEngine:
    """连分式引擎：持有算子规格与积分规则，缓存与λ无关的系数取值"""

    def __init__(self, spec: OperatorSpec, grid: Optional[QuadGrid] = None,
                 name: str = "default", threshold: float = RCOND_THRESHOLD,
                 delta: float = DEFAULT_DELTA):
        self.spec = spec
        self.grid = grid or QuadGrid()
        self.name = name
        self.threshold = threshold
        self.delta = delta
        self.logger = logging.getLogger(f"CFEngine.{name}")
        self._cache: "OrderedDict[Tuple, np.ndarray]" = OrderedDict()
        self._lock = threading.Lock()

    # ==================== 网格与系数 ====================
    def normalize_tail(self, level: int, k_tail) -> np.ndarray:
        """把尾部坐标整理为 (K, N−level) 数组"""
        width = self.spec.N - level
        tail = np.asarray(k_tail, dtype=float)
        if tail.size == 0:
            return np.zeros((1, width)) if width == 0 else tail.reshape(-1, width)
        if tail.ndim <= 1:
            tail = tail.reshape(1, -1) if width > 0 else tail.reshape(-1, 0)
        if tail.shape[-1] != width:
            raise ValueError(f"第 {level} 层需要 {width} 个尾部坐标，实际为 {tail.shape[-1]}")
        return tail.reshape(-1, width)

    def level_points(self, r: int, level: int, tail: np.ndarray) -> np.ndarray:
        """
        A_r 在第 level 层求值所需的点集

        形状 (K,) + (Q,)*(level−r) + (N,)，网格轴顺序 (k_level, ..., k_{r+1})。
        """
        N = self.spec.N
        Q = self.grid.Q
        K = tail.shape[0]
        n_grid = level - r
        shape = (K,) + (Q,) * n_grid
        points = np.empty(shape + (N,))
        points[..., :r] = DUMMY_COORD
        for m in range(r + 1, level + 1):
            axis_shape = [1] * (1 + n_grid)
            axis_shape[1 + (level - m)] = Q
            points[..., m - 1] = self.grid.nodes.reshape(axis_shape)
        for m in range(level + 1, N + 1):
            points[..., m - 1] = tail[:, m - level - 1].reshape((K,) + (1,) * n_grid)
        return points

    def coefficient(self, r: int, level: int, tail: np.ndarray) -> np.ndarray:
        """A_r 在第 level 层子网格上的取值，形状 (1, K) + (Q,)*(level−r) + (M, M)"""
        key = (r, level, self.grid.Q, tail.shape, tail.tobytes())
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                self._cache.move_to_end(key)
                return cached
        values = self.spec.evaluate(r, self.level_points(r, level, tail))[None]
        with self._lock:
            self._cache[key] = values
            while len(self._cache) > _COEFFICIENT_CACHE_SIZE:
                self._cache.popitem(last=False)
        return values

    def _lam_array(self, lam, n_grid: int) -> Tuple[np.ndarray, np.ndarray]:
        lam = np.atleast_1d(np.asarray(lam, dtype=complex)).reshape(-1)
        shaped = lam.reshape((-1, 1) + (1,) * n_grid + (1, 1))
        return lam, shaped

    # ==================== 连分式 ====================
    def evaluate(self, level: int, lam, k_tail=(), with_kernels: bool = True,
                 strict: bool = True, check_margin: Optional[bool] = None) -> CFState:
        """
        计算第 level 层的连分式栈

        Args:
            level: 层号 j，0 ≤ j ≤ N
            lam: 谱参数（标量或一维数组）
            k_tail: 尾部坐标 (k_{j+1},...,k_N)，单点或 (K, N−j) 数组
            with_kernels: 是否同时计算预解核 D、H
            strict: 内层矩阵数值奇异时抛出 SpectralProximityError，
                    λ距内层投影小于 δ 时抛出 QuadratureMarginError；
                    否则只在 rcond / margin 中标记
            check_margin: 是否计算与内层投影的距离，默认与 strict 相同

        Returns:
            CFState
        """
        if not 0 <= level <= self.spec.N:
            raise ValueError(f"层号必须在 [0, {self.spec.N}] 内: {level}")
        tail = self.normalize_tail(level, k_tail)
        lam, lam_shaped = self._lam_array(lam, level)
        L, K = len(lam), tail.shape[0]
        M = self.spec.M
        eye = np.eye(M, dtype=complex)

        rcond = np.full((L, K), np.inf)
        rcond_level = np.full((L, K), -1, dtype=int)

        def track(values: np.ndarray, r: int):
            reduced = values.reshape(L, K, -1).min(axis=-1) if values.ndim > 2 else values
            lower = reduced < rcond
            rcond_level[lower] = r
            np.minimum(rcond, reduced, out=rcond)

        F: List[np.ndarray] = []
        G: List[np.ndarray] = []
        Gbar: List[np.ndarray] = []
        mean_inv: List[Optional[np.ndarray]] = [None]

        A0 = self.coefficient(0, level, tail)
        F0 = A0 - lam_shaped * eye
        F.append(F0)
        G.append(F0)
        Gbar.append(F0)
        inv_prev = None
        if level > 0 or with_kernels:
            inv_prev, rc = batched_inverse(F0)
            if level > 0:
                track(rc, 0)
        inverses = [inv_prev]

        for r in range(1, level + 1):
            A_r = self.coefficient(r, level, tail)
            mean = self.grid.average(inverses[r - 1], axis=-3)
            mean_inv.append(mean)
            G_r = eye + mean @ A_r
            Gbar_r = eye + A_r @ mean
            G.append(G_r)
            Gbar.append(Gbar_r)
            mean_inverse, rc = batched_inverse(mean)
            if strict:
                # ⟨F_{r−1}⁻¹⟩_r 奇异时 F_r 无定义，G_r 与预解核仍有定义
                track(rc, r)
            F.append(A_r + mean_inverse)
            if r < level:
                # F_r⁻¹ = ⟨F_{r−1}⁻¹⟩_r Ḡ_r⁻¹
                gbar_inverse, rc = batched_inverse(Gbar_r)
                track(rc, r)
                inverses.append(mean @ gbar_inverse)

        state = CFState(lam, tail, level, F, mean_inv, G, Gbar, rcond=rcond, rcond_level=rcond_level)
        if with_kernels:
            self._attach_kernels(state, inverses[0], track)
        measure = strict if check_margin is None else check_margin
        if measure:
            state.margin, state.margin_level = self.projection_distance(
                level, lam, tail, [batched_det(g) for g in G[1:level]]
            )
        if strict:
            self.raise_if_singular(state)
            self.raise_if_near(state)
        return state

    def _attach_kernels(self, state: CFState, F0_inverse: np.ndarray, track):
        """D_r = G_r⁻¹ D_{r−1}，H_{r+1} = H_r Ḡ_r⁻¹，D_0 = H_1 = F_0⁻¹"""
        level = state.level
        D = [F0_inverse]
        H: List[Optional[np.ndarray]] = [None, F0_inverse]
        for r in range(1, level + 1):
            G_inverse, rc = batched_inverse(state.G[r])
            track(rc, r)
            D.append(expand_to_fine(G_inverse, r) @ D[r - 1])
            Gbar_inverse, rc = batched_inverse(state.Gbar[r])
            track(rc, r)
            H.append(H[r] @ expand_to_fine(Gbar_inverse, r))
        state.D = D
        state.H = H

    def raise_if_singular(self, state: CFState):
        if state.rcond_min < self.threshold:
            index = np.unravel_index(np.argmin(state.rcond), state.rcond.shape)
            level = int(state.rcond_level[index])
            self.logger.warning(
                f"第 {level} 层内层矩阵数值奇异: rcond={state.rcond_min:.3e}, "
                f"λ={state.lam[index[0]]}"
            )
            raise SpectralProximityError(level, state.rcond_min)

    # ==================== 投影边界 ====================
    def projection_distance(self, level: int, lam: np.ndarray, tail: np.ndarray,
                            inner_dets: List[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """
        λ 与内层投影 ∪_{r<level} λ_r([0,1]^{level−r}, k_tail) 的距离

        σ₀ 的投影取 A₀ 在积分节点上各本征值分支的 [min, max]；
        r ≥ 1 的投影只对实 λ 与自伴算子检测：det G_r 在子网格上变号时距离记为 0。
        自伴时 det G_r = det⟨F_{r−1}⁻¹⟩ det F_r 为实数。

        Args:
            level: 层号
            lam: (L,) 谱参数
            tail: (K, N−level) 尾部坐标
            inner_dets: det G_1 … det G_{level−1}，形状 (L, K) + 子网格

        Returns:
            (distance, nearest)，形状均为 (L, K)；nearest 为最近分量的层号，无内层时为 −1
        """
        L, K = len(lam), tail.shape[0]
        distance = np.full((L, K), np.inf)
        nearest = np.full((L, K), -1, dtype=int)
        if level == 0 or not self.spec.self_adjoint:
            return distance, nearest

        M = self.spec.M
        A0 = self.coefficient(0, level, tail)[0]
        branches = np.linalg.eigvalsh(A0).reshape(K, -1, M)
        lo = branches.min(axis=1)[None]
        hi = branches.max(axis=1)[None]
        lam_b = lam.reshape(-1, 1, 1)
        gap = np.maximum(np.maximum(lo - lam_b.real, lam_b.real - hi), 0.0)
        distance = np.hypot(gap, lam_b.imag).min(axis=-1)
        nearest[:] = 0

        real = (lam.imag == 0)[:, None]
        for r, det in enumerate(inner_dets, start=1):
            values = det.real.reshape(L, K, -1)
            with np.errstate(invalid="ignore"):
                crossing = (values.min(axis=-1) <= 0) & (values.max(axis=-1) >= 0)
            hit = crossing & real & (distance > 0)
            distance[hit] = 0.0
            nearest[hit] = r
        return distance, nearest

    def raise_if_near(self, state):
        """λ 距内层投影小于 δ 时抛出 QuadratureMarginError"""
        if state.margin is None or state.margin_min >= self.delta:
            return
        index = np.unravel_index(np.argmin(state.margin), state.margin.shape)
        level = int(state.margin_level[index])
        self.logger.warning(
            f"λ={state.lam[index[0]]} 距第 {level} 层投影 {state.margin_min:.3e} < δ={self.delta:.1e}"
        )
        raise QuadratureMarginError(level, state.margin_min, self.delta)

    # ==================== 独立递推 ====================
    def evaluate_ecd(self, level: int, lam, k_tail=(), strict: bool = True) -> ECDState:
        """
        不经过连分式的递推：
        C₀ = (A₀−λI)⁻¹，H_j = C₀ + Σ_{r<j} C_r⟨D_r⟩_{1..r}，C_j = −H_j A_j，
        E_j = I − ⟨C_j⟩_{1..j}，D_j = E_j⁻¹(C₀ + Σ_{r<j} ⟨C_r⟩_{1..r} D_r)
        """
        if not 0 <= level <= self.spec.N:
            raise ValueError(f"层号必须在 [0, {self.spec.N}] 内: {level}")
        tail = self.normalize_tail(level, k_tail)
        lam, lam_shaped = self._lam_array(lam, level)
        L, K = len(lam), tail.shape[0]
        eye = np.eye(self.spec.M, dtype=complex)
        rcond = np.full((L, K), np.inf)

        A0 = self.coefficient(0, level, tail)
        F0 = A0 - lam_shaped * eye
        C0, rc = batched_inverse(F0)
        if level > 0:
            np.minimum(rcond, rc.reshape(L, K, -1).min(axis=-1) if rc.ndim > 2 else rc, out=rcond)

        C = [C0]
        E = [F0]
        D = [C0]
        H: List[Optional[np.ndarray]] = [None]
        mean_C: List[Optional[np.ndarray]] = [None]
        mean_D: List[np.ndarray] = [C0]

        for j in range(1, level + 1):
            A_j = expand_to_fine(self.coefficient(j, level, tail), j)
            H_j = C0
            for r in range(1, j):
                H_j = H_j + C[r] @ expand_to_fine(mean_D[r], r)
            C_j = -H_j @ A_j
            mean_C_j = average_inner(C_j, self.grid, j)
            E_j = eye - mean_C_j
            source = C0
            for r in range(1, j):
                source = source + expand_to_fine(mean_C[r], r) @ D[r]
            E_inverse, rc = batched_inverse(E_j)
            if j < level:
                reduced = rc.reshape(L, K, -1).min(axis=-1) if rc.ndim > 2 else rc
                np.minimum(rcond, reduced, out=rcond)
            D_j = expand_to_fine(E_inverse, j) @ source
            H.append(H_j)
            C.append(C_j)
            E.append(E_j)
            D.append(D_j)
            mean_C.append(mean_C_j)
            mean_D.append(average_inner(D_j, self.grid, j))

        state = ECDState(lam, tail, level, C, E, D, H, mean_D, rcond)
        if strict:
            if state.rcond_min < self.threshold:
                raise SpectralProximityError(level, state.rcond_min)
            # E_r 与 G_r 相同
            state.margin, state.margin_level = self.projection_distance(
                level, lam, tail, [batched_det(e) for e in E[1:level]]
            )
            self.raise_if_near(state)
        return state


# ==================== 函数式接口 ====================
def cf_eval(spec: OperatorSpec, level: int, lam, k_tail=(), grid: Optional[QuadGrid] = None,
            with_kernels: bool = True, strict: bool = True) -> CFState:
    """在 (λ, k_tail) 上计算 F₀…F_j、G、Ḡ、H、D"""
    return ContinuedFractionEngine(spec, grid).evaluate(level, lam, k_tail, with_kernels, strict)


def cf_eval_via_ECD(spec: OperatorSpec, level: int, lam, k_tail=(),
                    grid: Optional[QuadGrid] = None, strict: bool = True) -> ECDState:
    """独立递推路径，用于交叉校验"""
    return ContinuedFractionEngine(spec, grid).evaluate_ecd(level, lam, k_tail, strict)
