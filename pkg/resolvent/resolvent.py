"""
算子与预解式在网格函数上的作用
𝒜u = A₀u + Σ_j A_j⟨u⟩_{1..j}
ℛ(λ)f = D₀f − Σ_r H_r A_r ⟨D_r f⟩_{1..r}
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from core.engine import DEFAULT_DELTA, ContinuedFractionEngine
from core.linalg import adjoint
from core.operator import OperatorSpec
from core.quadrature import QuadGrid
from expr import MatrixExpr, parse_expr

from .grid_function import GridFunction


logger = logging.getLogger(__name__)

FORMS = ("standard", "adjoint_h", "adjoint_d", "ecd")


def _apply(matrices: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    return np.einsum("...ab,...b->...a", matrices, vectors)


def _expand(vectors: np.ndarray, count: int) -> np.ndarray:
    """在分量轴前补 count 个单例网格轴"""
    return vectors.reshape(vectors.shape[:-1] + (1,) * count + vectors.shape[-1:])


def _check_compatible(spec: OperatorSpec, u: GridFunction):
    if u.dims != spec.N or u.M != spec.M:
        raise ValueError(f"网格函数 (N={u.dims}, M={u.M}) 与算子 (N={spec.N}, M={spec.M}) 维数不一致")


def _coefficients(engine: ContinuedFractionEngine) -> List[np.ndarray]:
    """A_r 在子网格 (k_N..k_{r+1}) 上的取值"""
    N = engine.spec.N
    tail = engine.normalize_tail(N, ())
    return [engine.coefficient(r, N, tail)[0, 0] for r in range(N + 1)]


def apply_operator(spec: OperatorSpec, u: GridFunction, grid: Optional[QuadGrid] = None) -> GridFunction:
    """每个 j 的部分平均只计算一次，再广播回细网格"""
    _check_compatible(spec, u)
    engine = ContinuedFractionEngine(spec, grid or u.grid)
    A = _coefficients(engine)
    result = _apply(A[0], u.values)
    for j in range(1, spec.N + 1):
        result = result + _expand(_apply(A[j], u.mean(j)), j)
    return GridFunction(result, u.grid)


class ResolventKernels:
    """
    单个λ处的预解核缓存

    D_r、H_r、A_r 与源无关，对多个源复用。
    form:
        standard   D₀f − Σ H_r A_r ⟨D_r f⟩
        adjoint_h  H₁f − Σ H_r A_r ⟨H_{r+1}* f⟩   (自伴且λ为实数)
        adjoint_d  D₀f − Σ D_{r−1}* A_r ⟨D_r f⟩   (自伴且λ为实数)
        ecd        C₀f + Σ C_r ⟨D_r f⟩            (独立递推)
    """

    def __init__(self, spec: OperatorSpec, lam: complex, grid: Optional[QuadGrid] = None,
                 form: str = "standard", strict: bool = True, name: str = "default",
                 delta: float = DEFAULT_DELTA):
        if form not in FORMS:
            raise ValueError(f"未知的预解式形式: {form}，可选 {FORMS}")
        self.spec = spec
        self.lam = complex(lam)
        self.form = form
        self.engine = ContinuedFractionEngine(spec, grid, name=name, delta=delta)
        self.logger = logging.getLogger(f"Resolvent.{name}")
        if form in ("adjoint_h", "adjoint_d") and not (spec.self_adjoint and self.lam.imag == 0.0):
            raise ValueError(f"{form} 形式只适用于自伴算子与实λ")

        N = spec.N
        self.A = _coefficients(self.engine)
        if form == "ecd":
            state = self.engine.evaluate_ecd(N, [self.lam], (), strict=strict)
            self.C = [c[0, 0] for c in state.C]
            self.D = [d[0, 0] for d in state.D]
            self.H = []
        else:
            state = self.engine.evaluate(N, [self.lam], (), with_kernels=True, strict=strict)
            self.C = []
            self.D = [d[0, 0] for d in state.D]
            self.H = [None] + [h[0, 0] for h in state.H[1:]]
        self.rcond = state.rcond_min
        self.logger.debug(f"λ={self.lam} 预解核就绪 (form={form}, rcond_min={self.rcond:.3e})")

    def _mean(self, values: np.ndarray, count: int) -> np.ndarray:
        for _ in range(count):
            values = self.engine.grid.average(values, axis=-2)
        return values

    def apply(self, f: GridFunction) -> GridFunction:
        _check_compatible(self.spec, f)
        x = f.values
        N = self.spec.N
        if self.form == "ecd":
            result = _apply(self.C[0], x)
            for r in range(1, N + 1):
                result = result + _apply(self.C[r], _expand(self._mean(_apply(self.D[r], x), r), r))
            return GridFunction(result, f.grid)

        if self.form == "adjoint_h":
            result = _apply(self.H[1], x)
        else:
            result = _apply(self.D[0], x)
        for r in range(1, N + 1):
            if self.form == "adjoint_h":
                inner = _apply(adjoint(self.H[r + 1]), x)
            else:
                inner = _apply(self.D[r], x)
            left = adjoint(self.D[r - 1]) if self.form == "adjoint_d" else self.H[r]
            projected = _apply(self.A[r], self._mean(inner, r))
            result = result - _apply(left, _expand(projected, r))
        return GridFunction(result, f.grid)


def apply_resolvent(spec: OperatorSpec, lam: complex, f: GridFunction,
                    grid: Optional[QuadGrid] = None, form: str = "standard",
                    delta: float = DEFAULT_DELTA) -> GridFunction:
    """
    ℛ(λ)f

    Raises:
        SpectralProximityError: 内层矩阵数值奇异
        QuadratureMarginError: λ 距内层谱分量的投影小于 delta
    """
    return ResolventKernels(spec, lam, grid or f.grid, form, delta=delta).apply(f)


def residual(spec: OperatorSpec, lam: complex, f: GridFunction, u: GridFunction) -> float:
    """‖(𝒜 − λ)u − f‖ / ‖f‖"""
    defect = apply_operator(spec, u) - u * lam - f
    return defect.norm() / max(f.norm(), np.finfo(float).tiny)


@dataclass
class LatticeSite:
    """格点源：胞 n 中的节点 p"""
    cell: Sequence[int]
    node: int


@dataclass
class ResponseReport:
    """源响应：u = ℛ(λ)f 及其范数、残差与逐点采样"""
    lam: complex
    response: GridFunction
    norm: float
    residual: float
    samples: pd.DataFrame

    def to_dict(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "norm": self.norm,
            "residual": self.residual,
            "response": self.response.to_dict(),
        }


Source = Union[GridFunction, LatticeSite, Sequence[Union[str, MatrixExpr]]]


def build_source(spec: OperatorSpec, source: Source, grid: QuadGrid) -> GridFunction:
    """把源描述转换为网格函数"""
    if isinstance(source, GridFunction):
        return source
    if isinstance(source, LatticeSite):
        if len(source.cell) != spec.N:
            raise ValueError(f"格点源的胞坐标需要 {spec.N} 个分量: {list(source.cell)}")
        return GridFunction.lattice_site(source.cell, source.node, spec.M, grid)
    expressions = [e if isinstance(e, MatrixExpr) else parse_expr(str(e), spec.N) for e in source]
    if len(expressions) != spec.M:
        raise ValueError(f"源表达式个数 {len(expressions)} 与 M={spec.M} 不一致")
    return GridFunction.from_expressions(expressions, grid)


def source_response(spec: OperatorSpec, lam: complex, source: Source,
                    grid: Optional[QuadGrid] = None, form: str = "standard",
                    sample_limit: int = 16, delta: float = DEFAULT_DELTA) -> ResponseReport:
    grid = grid or QuadGrid()
    f = build_source(spec, source, grid)
    u = ResolventKernels(spec, lam, grid, form, delta=delta).apply(f)
    report = ResponseReport(
        lam=complex(lam),
        response=u,
        norm=u.norm(),
        residual=residual(spec, lam, f, u),
        samples=u.to_frame(limit=sample_limit),
    )
    logger.info(f"λ={lam}: ‖u‖={report.norm:.6e}, 残差={report.residual:.3e}")
    return report


def dense_operator_matrix(spec: OperatorSpec, grid: QuadGrid) -> np.ndarray:
    """
    在张量网格上直接组装 𝒜 的稠密矩阵

    行列下标与 GridFunction.values.reshape(-1) 一致。
    """
    N, M, Q = spec.N, spec.M, grid.Q
    P = Q ** N
    engine = ContinuedFractionEngine(spec, grid)
    A = _coefficients(engine)
    total = np.zeros((P * M, P * M), dtype=complex)
    for j in range(N + 1):
        full = np.broadcast_to(A[j].reshape(A[j].shape[:-2] + (1,) * j + (M, M)), (Q,) * N + (M, M))
        block = np.zeros((P, M, P, M), dtype=complex)
        index = np.arange(P)
        block[index, :, index, :] = full.reshape(P, M, M)
        block = block.reshape(P * M, P * M)
        weights = np.ones(1)
        for _ in range(j):
            weights = np.kron(weights, grid.weights)
        averaging = np.kron(np.eye(Q ** (N - j)), np.outer(np.ones(Q ** j), weights))
        total += block @ np.kron(averaging, np.eye(M))
    return total
