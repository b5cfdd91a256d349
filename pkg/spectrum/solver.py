"""
谱分量求解器

σ₀ 来自 A₀(k) 的特征值；σ_j (1 ≤ j < N) 在每个尾部k点上扫描 det G_j，
扫描前去掉内层分量在该k点处的投影（加 δ 膨胀）；σ_N 是 det G_N 在连续谱间隙中的根。
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.engine import ContinuedFractionEngine
from core.errors import ExprEvaluationError, IntegrandError
from core.linalg import RCOND_THRESHOLD
from core.operator import OperatorSpec
from core.quadrature import QuadGrid
from utils.config import Settings
from utils.parallel import parallel_map

from .components import (
    DispersionBranch,
    Interval,
    RootRecord,
    SpectralComponent,
    complement_in_window,
    distance_to_intervals,
    hull_from_branches,
    inflate,
    merge_intervals,
)
from .roots import (
    link_branches,
    local_minima,
    polish_bisection,
    polish_minimum,
    refine_extremum,
    sign_change_brackets,
    split_by_index,
    winding_number,
)


# 边界k点求值失败时向内移动的距离
BOUNDARY_NUDGE = 1e-7

# r ≥ 1 的多维投影子网格每轴点数上限
MAX_NESTED_SUBGRID = 32


@dataclass
class SpectrumOptions:
    """谱求解参数"""
    kgrid: int = 128
    scan_points: int = 2000
    delta: float = 1e-6
    root_tol: float = 1e-9
    window: Optional[Interval] = None
    use_gbar: bool = False
    threads: int = 1
    batch_budget: int = 1 << 16
    rcond_threshold: float = RCOND_THRESHOLD
    subdivisions: int = 4

    @classmethod
    def from_settings(cls, settings: Settings, **overrides) -> "SpectrumOptions":
        values = dict(
            kgrid=settings.kgrid,
            scan_points=settings.scan_points,
            delta=settings.delta,
            root_tol=settings.root_tol,
            threads=settings.threads,
            batch_budget=settings.batch_budget,
            rcond_threshold=settings.rcond_threshold,
        )
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


def default_window(spec: OperatorSpec, level: Optional[int] = None) -> Interval:
    """
    λ扫描窗口：±(1.25·Σ_{r≤level} max‖A_r‖₂ + 0.5)

    平均算子范数不超过1，因此截断到第 level 层的算子谱落在该界内。
    """
    norms = spec.max_norms()
    top = spec.N if level is None else level
    bound = 1.25 * float(sum(norms[: top + 1])) + 0.5
    return -bound, bound


def tensor_grid(points_per_axis: int, dims: int) -> np.ndarray:
    """端点包含的张量k网格，形状 (G^dims, dims)，列顺序为 (k_{j+1}, ..., k_N)"""
    if dims == 0:
        return np.zeros((1, 0))
    axis = np.linspace(0.0, 1.0, points_per_axis)
    mesh = np.meshgrid(*([axis] * dims), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, dims)


def _one_cell_variation(values: np.ndarray, points_per_axis: int, dims: int) -> float:
    """相邻网格点之间取值变化的最大值，用作单格膨胀量"""
    if values.size < 2:
        return 0.0
    real = np.real(values)
    if dims > 1 and real.size == points_per_axis ** dims:
        real = real.reshape((points_per_axis,) * dims)
        steps = [np.abs(np.diff(real, axis=axis)) for axis in range(dims)]
    else:
        steps = [np.abs(np.diff(real))]
    finite = [s[np.isfinite(s)] for s in steps]
    return float(max((s.max() for s in finite if s.size), default=0.0))


class SpectrumSolver:
    """
    谱求解器

    持有一个连分式引擎；每个尾部k点是独立任务，结果按网格顺序收集。
    """

    def __init__(self, spec: OperatorSpec, grid: Optional[QuadGrid] = None,
                 options: Optional[SpectrumOptions] = None, name: Optional[str] = None):
        self.spec = spec
        self.options = options or SpectrumOptions()
        self.name = name or spec.name
        self.engine = ContinuedFractionEngine(spec, grid, name=self.name,
                                              threshold=self.options.rcond_threshold)
        self.logger = logging.getLogger(f"Spectrum.{self.name}")
        self.self_adjoint = spec.self_adjoint
        self._components: Dict[int, SpectralComponent] = {}
        self._windows: Dict[int, Interval] = {}
        self.discarded_cells = 0

    @property
    def grid(self) -> QuadGrid:
        return self.engine.grid

    @property
    def scalar_path(self) -> bool:
        """标量自伴情形：F_j 为实值，用变号二分"""
        return self.spec.is_scalar and self.self_adjoint

    def window(self, level: int) -> Interval:
        if self.options.window is not None:
            return tuple(self.options.window)
        if level not in self._windows:
            self._windows[level] = default_window(self.spec, level)
        return self._windows[level]

    # ==================== k点防护 ====================
    def _guarded(self, func: Callable[[np.ndarray], object], point: np.ndarray):
        """
        在单个k点上执行 func

        系数求值失败时，边界点向内移动 BOUNDARY_NUDGE 后重试一次；
        仍失败则返回 (None, point)，由调用方丢弃。
        """
        try:
            return func(point), point
        except (ExprEvaluationError, IntegrandError) as exc:
            nudged = np.clip(point, BOUNDARY_NUDGE, 1.0 - BOUNDARY_NUDGE)
            if np.array_equal(nudged, point):
                self.logger.warning(f"k={point.tolist()} 处求值失败，丢弃该点: {exc}")
                return None, point
            try:
                return func(nudged), nudged
            except (ExprEvaluationError, IntegrandError) as retry_exc:
                self.logger.warning(f"k={point.tolist()} 处求值失败，丢弃该点: {retry_exc}")
                return None, point

    # ==================== σ₀ ====================
    def eigen_roots(self, points: np.ndarray) -> np.ndarray:
        """
        det(A₀(k) − λI) 的根，形状 (P, M)

        M=1 直接取值，M=2 用特征多项式的求根公式，一般 M 取特征值。
        自伴情形返回升序实根。
        """
        values = self.spec.evaluate_tail(0, np.asarray(points, dtype=float))
        M = self.spec.M
        if M == 1:
            roots = values[..., 0, 0][..., None]
        elif M == 2:
            trace = values[..., 0, 0] + values[..., 1, 1]
            det = values[..., 0, 0] * values[..., 1, 1] - values[..., 0, 1] * values[..., 1, 0]
            root = np.sqrt(trace * trace / 4.0 - det + 0j)
            roots = np.stack([trace / 2.0 - root, trace / 2.0 + root], axis=-1)
        else:
            roots = np.linalg.eigvals(values)
        if self.self_adjoint:
            return np.sort(roots.real, axis=-1)
        return np.sort_complex(roots)

    def _eigen_rows(self, points: np.ndarray) -> Tuple[List[Optional[np.ndarray]], np.ndarray]:
        """逐点特征根；整批求值失败时退回逐点防护"""
        try:
            roots = self.eigen_roots(points)
            return [row for row in roots], points
        except (ExprEvaluationError, IntegrandError):
            rows, used = [], []
            for point in points:
                row, actual = self._guarded(lambda p: self.eigen_roots(p[None])[0], point)
                rows.append(row)
                used.append(actual)
            return rows, np.asarray(used).reshape(points.shape)

    def sigma0(self, k_grid: Optional[np.ndarray] = None) -> SpectralComponent:
        """σ₀ = ∪_k {λ : det(A₀(k) − λI) = 0}"""
        default = k_grid is None
        if default and 0 in self._components:
            return self._components[0]
        G = self.options.kgrid
        points = tensor_grid(G, self.spec.N) if default else np.asarray(k_grid, dtype=float)
        rows, used = self._eigen_rows(points)
        dropped = sum(row is None for row in rows)
        width = self.spec.M
        dtype = float if self.self_adjoint else complex
        table = np.full((len(rows), width), np.nan, dtype=dtype)
        for i, row in enumerate(rows):
            if row is not None:
                table[i] = row
        branches = [DispersionBranch(0, used, table[:, b], "eigen") for b in range(width)]
        hull = hull_from_branches(branches)
        if default and self.spec.N == 1 and self.self_adjoint:
            hull = merge_intervals([
                self._refined_eigen_range(used[:, 0], branch.values, np.zeros(0), b)
                for b, branch in enumerate(branches) if branch.range() is not None
            ])
        component = SpectralComponent(
            level=0,
            branches=branches,
            hull=hull,
            points=None if self.self_adjoint else table[np.isfinite(table)],
            real=self.self_adjoint,
            dropped=dropped,
        )
        if default and self.spec.N > 1:
            component.resolution = max(_one_cell_variation(table[:, b], G, self.spec.N) for b in range(width))
        self.logger.info(f"σ₀: {len(points)} 个k点, hull={component.hull}")
        if default:
            self._components[0] = component
        return component

    def _refined_eigen_range(self, axis: np.ndarray, values: np.ndarray, tail: np.ndarray, b: int) -> Interval:
        """沿 k_1 细化第 b 个特征根的最小与最大值"""
        def branch_value(x: float) -> float:
            point = np.concatenate([[x], tail])[None]
            return float(self.eigen_roots(point)[0, b])

        real = np.real(values)
        finite = np.isfinite(real)
        if not finite.all():
            return float(np.nanmin(real)), float(np.nanmax(real))
        last = len(axis) - 1
        i_min, i_max = int(np.argmin(real)), int(np.argmax(real))
        lo = refine_extremum(branch_value, axis[max(i_min - 1, 0)], axis[min(i_min + 1, last)])
        hi = refine_extremum(branch_value, axis[max(i_max - 1, 0)], axis[min(i_max + 1, last)], maximize=True)
        return min(lo, float(real.min())), max(hi, float(real.max()))

    # ==================== 排除集 ====================
    def projection(self, r: int, level: int, tail: np.ndarray) -> List[Interval]:
        """
        λ_r([0,1]^{level−r}, k) 的区间并（未加 δ）

        一维子网格且 r=0 时用有界极小化细化端点，其余情形按单格变化量膨胀。
        """
        dims = level - r
        G = self.options.kgrid if r == 0 or dims == 1 else min(self.options.kgrid, MAX_NESTED_SUBGRID)
        sub = tensor_grid(G, dims)
        points = np.concatenate([sub, np.broadcast_to(tail, (len(sub), len(tail)))], axis=1)
        if r == 0:
            rows, _ = self._eigen_rows(points)
            width = self.spec.M
            table = np.full((len(rows), width), np.nan)
            for i, row in enumerate(rows):
                if row is not None:
                    table[i] = np.real(row)
            if dims == 1 and self.self_adjoint:
                return merge_intervals([
                    self._refined_eigen_range(sub[:, 0], table[:, b], tail, b)
                    for b in range(width) if np.isfinite(table[:, b]).any()
                ])
            branches = [table[:, b] for b in range(width)]
        else:
            roots = [np.real(np.asarray([rec.lam for rec in records])) if records is not None else np.zeros(0)
                     for records, _ in self._records_at(r, points)]
            jump = self._link_jump(r, G)
            branches = link_branches(roots, jump) if dims == 1 else split_by_index(roots)
        intervals = []
        for values in branches:
            real = np.real(values)
            if not np.isfinite(real).any():
                continue
            cell = _one_cell_variation(real, G, dims)
            intervals.append((float(np.nanmin(real)) - cell, float(np.nanmax(real)) + cell))
        return merge_intervals(intervals)

    def exclusion_intervals(self, level: int, tail: np.ndarray,
                            inner: Optional[Sequence[SpectralComponent]] = None) -> List[Interval]:
        """第 level 层在尾部点 tail 处需排除的投影并（未加 δ）"""
        if level == self.spec.N:
            components = inner if inner is not None else self.inner_components(level)
            return merge_intervals([
                (a - component.resolution, b + component.resolution)
                for component in components for a, b in component.hull
            ])
        intervals: List[Interval] = []
        for r in range(level):
            intervals.extend(self.projection(r, level, tail))
        return merge_intervals(intervals)

    def inner_components(self, level: int) -> List[SpectralComponent]:
        return [self.sigma0()] + [self.sigma_j(r) for r in range(1, level)]

    # ==================== λ扫描 ====================
    def _chunk(self, level: int) -> int:
        per_lambda = self.grid.Q ** level * self.spec.M ** 2
        return max(1, self.options.batch_budget // per_lambda)

    def _sample(self, level: int, tail: np.ndarray, lams: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        扫描函数取值与有效标记

        标量自伴情形为 F_j，否则为 det G_j（或 det Ḡ_j）。
        """
        values, valid = [], []
        step = self._chunk(level)
        for start in range(0, len(lams), step):
            state = self.engine.evaluate(level, lams[start:start + step], tail,
                                         with_kernels=False, strict=False)
            if self.scalar_path:
                target = state.F[level][:, 0, 0, 0]
            elif self.options.use_gbar:
                target = state.det_Gbar()[:, 0]
            else:
                target = state.det_G()[:, 0]
            values.append(target)
            valid.append(state.rcond[:, 0] >= self.options.rcond_threshold)
        values = np.concatenate(values) if values else np.zeros(0, dtype=complex)
        valid = np.concatenate(valid) if valid else np.zeros(0, dtype=bool)
        return values, valid & np.isfinite(values)

    def _residual(self, level: int, tail: np.ndarray, lam: complex) -> float:
        state = self.engine.evaluate(level, np.array([lam]), tail, with_kernels=False, strict=False)
        return float(abs(state.det_G()[0, 0]))

    def _subdivide(self, level: int, tail: np.ndarray, lams: np.ndarray, values: np.ndarray,
                   valid: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """数值奇异的λ格二分加密，仍无效的格子被丢弃"""
        for _ in range(self.options.subdivisions):
            bad = np.flatnonzero(~valid)
            if bad.size == 0:
                break
            mids = []
            for i in bad:
                if i > 0:
                    mids.append(0.5 * (lams[i - 1] + lams[i]))
                if i < len(lams) - 1:
                    mids.append(0.5 * (lams[i] + lams[i + 1]))
            mids = np.setdiff1d(np.unique(mids), lams)
            if mids.size == 0:
                break
            new_values, new_valid = self._sample(level, tail, mids)
            lams = np.concatenate([lams, mids])
            order = np.argsort(lams, kind="stable")
            lams = lams[order]
            values = np.concatenate([values, new_values])[order]
            valid = np.concatenate([valid, new_valid])[order]
        discarded = int((~valid).sum())
        if discarded:
            self.discarded_cells += discarded
            self.logger.debug(f"第 {level} 层 k={tail.tolist()} 丢弃 {discarded} 个数值奇异的λ格")
        return lams, values, valid

    def _scan_interval(self, level: int, tail: np.ndarray, interval: Interval,
                       excluded: List[Interval], scan_points: int) -> List[RootRecord]:
        lo, hi = self.window(level)
        a, b = interval
        grid_lams = np.linspace(lo, hi, scan_points)
        lams = np.concatenate([[a], grid_lams[(grid_lams > a) & (grid_lams < b)], [b]])
        values, valid = self._sample(level, tail, lams)
        lams, values, valid = self._subdivide(level, tail, lams, values, valid)

        def scan_value(x: float) -> complex:
            return self._sample(level, tail, np.array([x]))[0][0]

        records: List[RootRecord] = []
        real_valued = self.self_adjoint
        method = "bisection" if self.scalar_path else "det-scan"
        used_cells = set()
        if real_valued:
            real = np.real(values)
            for i, j in sign_change_brackets(lams, real, valid):
                root = polish_bisection(lambda x: float(np.real(scan_value(x))), lams[i], lams[j])
                used_cells.update({i, j})
                records.append(self._record(level, tail, root, interval, (lams[i], lams[j]), excluded, method))
        if not self.scalar_path:
            magnitude = np.abs(values)
            for i in local_minima(magnitude, valid):
                if {i - 1, i, i + 1} & used_cells:
                    continue
                root, value = polish_minimum(lambda x: float(abs(scan_value(x))), lams[i - 1], lams[i + 1])
                if value >= self.options.root_tol:
                    continue
                if not real_valued:
                    radius = 0.5 * (lams[i + 1] - lams[i - 1])
                    count = winding_number(lambda z: self._complex_target(level, tail, z), root, radius)
                    if count < 1:
                        continue
                records.append(self._record(level, tail, root, interval, (lams[i - 1], lams[i + 1]), excluded, "det-scan"))
        return [record for record in records if record is not None]

    def _complex_target(self, level: int, tail: np.ndarray, lams: np.ndarray) -> np.ndarray:
        state = self.engine.evaluate(level, lams, tail, with_kernels=False, strict=False)
        return state.det_Gbar()[:, 0] if self.options.use_gbar else state.det_G()[:, 0]

    def _record(self, level: int, tail: np.ndarray, root: float, interval: Interval,
                bracket: Interval, excluded: List[Interval], method: str) -> Optional[RootRecord]:
        residual = self._residual(level, tail, root)
        if not residual < self.options.root_tol:
            self.logger.debug(f"第 {level} 层 k={tail.tolist()} 候选根 {root} 残差 {residual:.3e}，舍弃")
            return None
        margin = distance_to_intervals(root, excluded)
        return RootRecord(lam=root, interval=interval, bracket=bracket, residual=residual,
                          method=method, margin=margin)

    def scan_point(self, level: int, tail, scan_points: Optional[int] = None,
                   inner: Optional[Sequence[SpectralComponent]] = None) -> List[RootRecord]:
        """
        在单个尾部点上求 det G_j 的全部根

        Args:
            level: 层号 j ≥ 1
            tail: (k_{j+1}, ..., k_N)
            scan_points: 窗口内扫描点数
            inner: 仅 level=N 时使用的内层分量

        Returns:
            RootRecord 列表，按λ升序
        """
        tail = np.asarray(tail, dtype=float).reshape(-1)
        excluded = self.exclusion_intervals(level, tail, inner)
        allowed = complement_in_window(self.window(level), inflate(excluded, self.options.delta))
        records: List[RootRecord] = []
        for interval in allowed:
            records.extend(self._scan_interval(level, tail, interval, excluded,
                                               scan_points or self.options.scan_points))
        return sorted(records, key=lambda record: np.real(record.lam))

    def _records_at(self, level: int, points: np.ndarray, threads: int = 1,
                    scan_points: Optional[int] = None) -> List[Tuple[Optional[List[RootRecord]], np.ndarray]]:
        """逐点扫描，返回 (根记录或None, 实际使用的k点)，顺序与输入一致"""
        def work(point):
            return self._guarded(lambda p: self.scan_point(level, p, scan_points), point)

        return parallel_map(work, list(points), threads)

    def _link_jump(self, level: int, points_per_axis: int) -> float:
        lo, hi = self.window(level)
        return max(4.0 * (hi - lo) / max(points_per_axis - 1, 1), 10.0 * self.options.delta)

    # ==================== σ_j 与 σ_N ====================
    def sigma_j(self, j: int, k_grid: Optional[np.ndarray] = None,
                scan_points: Optional[int] = None) -> SpectralComponent:
        """σ_j，1 ≤ j < N：在每个尾部k点上去掉内层投影后扫描 det G_j"""
        N = self.spec.N
        if not 1 <= j < N:
            raise ValueError(f"sigma_j 需要 1 ≤ j < N={N}: {j}")
        default = k_grid is None and scan_points is None
        if default and j in self._components:
            return self._components[j]
        G = self.options.kgrid
        dims = N - j
        points = tensor_grid(G, dims) if k_grid is None else np.asarray(k_grid, dtype=float).reshape(-1, dims)

        results = self._records_at(j, points, self.options.threads, scan_points)
        used = np.array([actual for _, actual in results]).reshape(points.shape)
        dropped = sum(records is None for records, _ in results)
        dtype = float if self.self_adjoint else complex
        roots = [np.asarray([rec.lam for rec in records], dtype=dtype) if records else np.zeros(0, dtype=dtype)
                 for records, _ in results]
        margins = [rec.margin for records, _ in results if records for rec in records]
        if dims == 1 and len(points) > 1:
            series = link_branches(roots, self._link_jump(j, len(points)))
        else:
            series = split_by_index(roots)
        method = "bisection" if self.scalar_path else "det-scan"
        branches = [DispersionBranch(j, used, values, method) for values in series]
        component = SpectralComponent(
            level=j,
            branches=branches,
            hull=hull_from_branches(branches),
            points=None if self.self_adjoint else np.concatenate(roots) if roots else None,
            margin=min(margins, default=float("inf")),
            real=self.self_adjoint,
            dropped=dropped,
            resolution=max((_one_cell_variation(values, G, dims) for values in series), default=0.0),
        )
        if dropped:
            self.logger.warning(f"σ_{j}: 丢弃了 {dropped} 个求值失败的k点")
        self.logger.info(f"σ_{j}: {len(points)} 个k点, {len(branches)} 条分支, hull={component.hull}")
        if default:
            self._components[j] = component
        return component

    def sigma_N(self, inner: Optional[Sequence[SpectralComponent]] = None,
                scan_points: Optional[int] = None) -> SpectralComponent:
        """σ_N：det G_N 在连续谱间隙中的根（孤立特征值）"""
        N = self.spec.N
        if inner is None and scan_points is None and N in self._components:
            return self._components[N]
        records = self.scan_point(N, np.zeros(0), scan_points, inner)
        empty_grid = np.zeros((1, 0))
        branches = [DispersionBranch(N, empty_grid, np.array([record.lam]), record.method) for record in records]
        values = [float(np.real(record.lam)) for record in records]
        component = SpectralComponent(
            level=N,
            branches=branches,
            hull=[(value, value) for value in values],
            points=np.array([record.lam for record in records]) if not self.self_adjoint else None,
            margin=min((record.margin for record in records), default=float("inf")),
            real=self.self_adjoint,
        )
        self.logger.info(f"σ_{N}: {len(values)} 个特征值 {values}")
        if inner is None and scan_points is None:
            self._components[N] = component
        return component

    def sigma_N_eigenvalues(self, inner: Optional[Sequence[SpectralComponent]] = None,
                            scan_points: Optional[int] = None) -> List[float]:
        return [a for a, _ in self.sigma_N(inner, scan_points).hull]

    def full_spectrum(self) -> List[SpectralComponent]:
        """σ₀, σ₁, …, σ_N 及不相交性元数据"""
        components = [self.sigma0()]
        for j in range(1, self.spec.N):
            components.append(self.sigma_j(j))
        components.append(self.sigma_N(inner=components))
        self._components[self.spec.N] = components[-1]
        return components


# ==================== 函数式接口 ====================
def _solver(spec: OperatorSpec, grid: Optional[QuadGrid], options: Optional[SpectrumOptions],
            **overrides) -> SpectrumSolver:
    options = options or SpectrumOptions()
    values = {key: value for key, value in overrides.items() if value is not None}
    if values:
        options = replace(options, **values)
    return SpectrumSolver(spec, grid, options)


def sigma0(spec: OperatorSpec, k_grid: Optional[np.ndarray] = None,
           options: Optional[SpectrumOptions] = None) -> SpectralComponent:
    return _solver(spec, None, options).sigma0(k_grid)


def sigma_j(spec: OperatorSpec, j: int, k_grid: Optional[np.ndarray] = None,
            window: Optional[Interval] = None, scan_points: Optional[int] = None,
            grid: Optional[QuadGrid] = None, options: Optional[SpectrumOptions] = None) -> SpectralComponent:
    return _solver(spec, grid, options, window=window).sigma_j(j, k_grid, scan_points)


def sigma_N_eigenvalues(spec: OperatorSpec, window: Optional[Interval] = None,
                        scan_points: Optional[int] = None, grid: Optional[QuadGrid] = None,
                        options: Optional[SpectrumOptions] = None,
                        inner: Optional[Sequence[SpectralComponent]] = None) -> List[float]:
    return _solver(spec, grid, options, window=window).sigma_N_eigenvalues(inner, scan_points)


def full_spectrum(spec: OperatorSpec, options: Optional[SpectrumOptions] = None,
                  grid: Optional[QuadGrid] = None) -> List[SpectralComponent]:
    return SpectrumSolver(spec, grid, options).full_spectrum()


def branch_table(component: SpectralComponent):
    """分支表：k坐标、层号、分支号、λ"""
    return component.to_frame()
