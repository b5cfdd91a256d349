"""
石墨烯模型：两点胞的六角格，线缺陷 Γ₁ = {1}×0×ℤ，点缺陷 Γ₂ = {2}×0×0
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from core.engine import DEFAULT_DELTA, ContinuedFractionEngine
from core.operator import OperatorSpec
from core.quadrature import QuadGrid
from spectrum import SpectrumOptions, SpectrumSolver, tensor_grid

from .closed_forms import closed_form_projection, closed_form_sigma0, guided_candidates
from .torus import TorusLattice, torus_from_spec


logger = logging.getLogger(__name__)

HOPPING = [
    ["0", "exp(-2*pi*i*k1)*(1+exp(2*pi*i*k2))+1"],
    ["exp(2*pi*i*k1)*(1+exp(-2*pi*i*k2))+1", "0"],
]


@dataclass
class GrapheneModel:
    """离散Schrödinger算子 Δ̃ + V，V₁ 为线缺陷势，V₂ 为点缺陷势"""
    V1: float
    V2: float
    spec: OperatorSpec

    def solver(self, options: Optional[SpectrumOptions] = None,
               grid: Optional[QuadGrid] = None) -> SpectrumSolver:
        return SpectrumSolver(self.spec, grid, options, name=self.spec.name)

    def d_loc(self, lam: complex, grid: Optional[QuadGrid] = None, strict: bool = True) -> complex:
        return complex(d_loc(lam, self.V1, self.V2, grid, strict=strict, spec=self.spec)[0])

    def torus(self, P: int) -> TorusLattice:
        return torus_from_spec(self.spec, P)

    def __repr__(self):
        return f"GrapheneModel(V1={self.V1}, V2={self.V2})"


def build_graphene(V1: float = 0.0, V2: float = 0.0) -> GrapheneModel:
    """A₀ 为六角格跳跃矩阵，A₁ = diag(V₁, 0)，A₂ = diag(0, V₂)"""
    V1, V2 = float(V1), float(V2)
    rows = [
        HOPPING,
        [[repr(V1), "0"], ["0", "0"]],
        [["0", "0"], ["0", repr(V2)]],
    ]
    spec = OperatorSpec.from_strings(2, rows, name=f"graphene(V1={V1:g},V2={V2:g})", self_adjoint_hint=True)
    return GrapheneModel(V1, V2, spec)


def d_loc(lam, V1: float, V2: float, grid: Optional[QuadGrid] = None, strict: bool = True,
          spec: Optional[OperatorSpec] = None, delta: float = DEFAULT_DELTA) -> np.ndarray:
    """
    D_loc(λ) = det G₂，对一组λ批量计算

    strict=True 时λ落入 σ₀、σ₁ 投影的 delta 邻域抛出 QuadratureMarginError；
    strict=False 时这些λ与数值奇异的λ返回 NaN。
    """
    spec = spec or build_graphene(V1, V2).spec
    engine = ContinuedFractionEngine(spec, grid, name=spec.name, delta=delta)
    state = engine.evaluate(2, np.atleast_1d(lam), (), with_kernels=False, strict=strict, check_margin=True)
    values = state.det_G()[:, 0]
    if not strict:
        values = np.where(state.valid_mask(engine.threshold, engine.delta)[:, 0], values, np.nan)
    return values


def torus_oracle(V1: float, V2: float, P: int) -> np.ndarray:
    """环面上直接对角化得到的升序特征值"""
    return build_graphene(V1, V2).torus(P).eigenvalues()


# ==================== 数据表 ====================
def dispersion_surface(points_per_axis: int = 64) -> pd.DataFrame:
    """传播色散面：k1, k2, λ₋, λ₊（数值特征值）与闭式值"""
    model = build_graphene()
    points = tensor_grid(points_per_axis, 2)
    roots = model.solver().eigen_roots(points)
    minus, plus = closed_form_sigma0(points)
    return pd.DataFrame({
        "k1": points[:, 0],
        "k2": points[:, 1],
        "lambda_minus": roots[:, 0],
        "lambda_plus": roots[:, 1],
        "closed_minus": minus,
        "closed_plus": plus,
    })


def projection_curves(points: int = 129) -> pd.DataFrame:
    """投影边界的四条曲线"""
    k2 = np.linspace(0.0, 1.0, points)
    curves = closed_form_projection(k2)
    return pd.DataFrame({
        "k2": k2,
        "minus_max": curves[:, 0],
        "minus_min": curves[:, 1],
        "plus_min": curves[:, 2],
        "plus_max": curves[:, 3],
    })


GUIDED_COLUMNS = ["k2", "branch", "lambda", "closed_form", "deviation"]


def compare_guided(frame: pd.DataFrame, V1: float) -> pd.DataFrame:
    """给 σ₁ 分支表补上最近的闭式候选与偏差"""
    rows = []
    for k2, branch, lam in zip(frame["k2"], frame["branch"], np.real(frame["lambda"])):
        candidates = guided_candidates(k2, V1)
        nearest = float(candidates[np.argmin(np.abs(candidates - lam))]) if candidates.size else np.nan
        rows.append({"k2": k2, "branch": branch, "lambda": lam,
                     "closed_form": nearest, "deviation": abs(lam - nearest)})
    return pd.DataFrame(rows, columns=GUIDED_COLUMNS)


def guided_curves(V1: float, k2: Optional[Sequence[float]] = None,
                  options: Optional[SpectrumOptions] = None,
                  grid: Optional[QuadGrid] = None) -> pd.DataFrame:
    """
    导波色散曲线：σ₁ 的数值分支及最近的闭式候选

    Returns:
        列 k2, branch, lambda, closed_form, deviation
    """
    solver = build_graphene(V1, 0.0).solver(options, grid)
    k_grid = None if k2 is None else np.asarray(k2, dtype=float).reshape(-1, 1)
    frame = compare_guided(solver.sigma_j(1, k_grid).to_frame(), V1)
    logger.info(f"V1={V1}: {len(frame)} 个导波根, 最大偏差 {frame['deviation'].max() if len(frame) else 0.0:.3e}")
    return frame


def d_loc_scan(V1: float, V2: float, lambdas: Sequence[float],
               grid: Optional[QuadGrid] = None, chunk: int = 16,
               delta: float = DEFAULT_DELTA) -> pd.DataFrame:
    """D_loc(λ) 扫描，落在 σ₀、σ₁ 投影的 delta 邻域内为 NaN"""
    lambdas = np.asarray(lambdas, dtype=float)
    spec = build_graphene(V1, V2).spec
    values = np.concatenate([
        d_loc(lambdas[start:start + chunk], V1, V2, grid, strict=False, spec=spec, delta=delta)
        for start in range(0, len(lambdas), chunk)
    ]) if len(lambdas) else np.zeros(0, dtype=complex)
    return pd.DataFrame({"lambda": lambdas, "d_loc": values.real, "d_loc_imag": values.imag})
