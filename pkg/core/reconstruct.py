"""
由行列式矩阵 G_j 或连分式 F_j 的采样重构系数 A_j
A₀ = λI + G₀，A_j = ⟨(G₀…G_{j−1})⁻¹⟩_{1..j}⁻¹ (G_j − I)
A_j = F_j − ⟨F_{j−1}⁻¹⟩_j⁻¹
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .engine import ContinuedFractionEngine, average_inner, expand_to_fine
from .errors import InconsistentSpectralDataError, SpectralProximityError
from .linalg import RCOND_THRESHOLD, batched_inverse
from .operator import OperatorSpec
from .quadrature import QuadGrid


logger = logging.getLogger(__name__)

LAMBDA_DEPENDENCE_TOLERANCE = 1e-8


@dataclass
class SpectralSamples:
    """
    在若干探测λ上、完整张量网格上的 G/F 采样

    G[r], F[r] 形状为 (P,) + (Q,)*(N−r) + (M, M)，P 为探测λ个数。
    """
    lam: np.ndarray
    G: List[np.ndarray]
    F: List[np.ndarray]

    @property
    def N(self) -> int:
        return len(self.G) - 1

    def concatenate(self, other: "SpectralSamples") -> "SpectralSamples":
        return SpectralSamples(
            np.concatenate([self.lam, other.lam]),
            [np.concatenate([a, b]) for a, b in zip(self.G, other.G)],
            [np.concatenate([a, b]) for a, b in zip(self.F, other.F)],
        )


def sample_states(spec: OperatorSpec, lambdas: Sequence[complex], grid: Optional[QuadGrid] = None) -> SpectralSamples:
    """在探测λ上采样 G₀…G_N 与 F₀…F_N（λ须远离全部谱分量）"""
    engine = ContinuedFractionEngine(spec, grid, name="sampler")
    state = engine.evaluate(spec.N, lambdas, (), with_kernels=False)
    # 去掉长度为1的 K 轴
    return SpectralSamples(
        state.lam,
        [g[:, 0] for g in state.G],
        [f[:, 0] for f in state.F],
    )


def _lambda_shaped(lam: np.ndarray, values: np.ndarray) -> np.ndarray:
    return lam.reshape((-1,) + (1,) * (values.ndim - 1))


def _checked_inverse(stack: np.ndarray, level: int) -> np.ndarray:
    """求逆并检查条件数，数值奇异时抛出 SpectralProximityError"""
    inverse, rcond = batched_inverse(stack)
    worst = float(np.min(rcond)) if rcond.size else float("inf")
    if worst < RCOND_THRESHOLD:
        logger.error(f"第 {level} 层采样矩阵数值奇异 (rcond={worst:.3e})")
        raise SpectralProximityError(level, worst)
    return inverse


def _consistent(level: int, samples: np.ndarray, tolerance: float) -> np.ndarray:
    """检查各探测λ给出的重构结果一致，返回第一个探测的结果"""
    reference = samples[0]
    scale = max(1.0, float(np.max(np.abs(reference))))
    deviation = float(np.max(np.abs(samples - reference[None]))) / scale
    if not np.isfinite(deviation) or deviation > tolerance:
        logger.error(f"重构的 A_{level} 随 λ 变化 (偏差 {deviation:.3e})")
        raise InconsistentSpectralDataError(level, deviation)
    return reference


def reconstruct_A(samples: SpectralSamples, grid: Optional[QuadGrid] = None,
                  tolerance: float = LAMBDA_DEPENDENCE_TOLERANCE) -> List[np.ndarray]:
    """
    由 G 采样重构 A₀…A_N

    Args:
        samples: sample_states 的结果（可拼接多组）
        grid: 与采样相同的积分规则
        tolerance: λ依赖性容差

    Returns:
        A_j 在 (Q,)*(N−j) 子网格上的取值列表

    Raises:
        InconsistentSpectralDataError: 重构结果随λ变化
        SpectralProximityError: 采样矩阵数值奇异
    """
    grid = grid or QuadGrid()
    G = samples.G
    M = G[0].shape[-1]
    eye = np.eye(M, dtype=complex)
    result = []

    A0 = _lambda_shaped(samples.lam, G[0]) * eye + G[0]
    result.append(_consistent(0, A0, tolerance))

    product = G[0]
    for j in range(1, samples.N + 1):
        product_inverse = _checked_inverse(product, j - 1)
        mean = average_inner(product_inverse, grid, j)
        mean_inverse = _checked_inverse(mean, j)
        A_j = mean_inverse @ (G[j] - eye)
        result.append(_consistent(j, A_j, tolerance))
        product = product @ expand_to_fine(G[j], j)
    return result


def reconstruct_A_from_F(samples: SpectralSamples, grid: Optional[QuadGrid] = None,
                         tolerance: float = LAMBDA_DEPENDENCE_TOLERANCE) -> List[np.ndarray]:
    """由 F 采样重构：A₀ = F₀ + λI，A_j = F_j − ⟨F_{j−1}⁻¹⟩_j⁻¹"""
    grid = grid or QuadGrid()
    F = samples.F
    M = F[0].shape[-1]
    eye = np.eye(M, dtype=complex)
    result = [_consistent(0, F[0] + _lambda_shaped(samples.lam, F[0]) * eye, tolerance)]
    for j in range(1, samples.N + 1):
        previous_inverse = _checked_inverse(F[j - 1], j - 1)
        mean_inverse = _checked_inverse(grid.average(previous_inverse, axis=-3), j)
        result.append(_consistent(j, F[j] - mean_inverse, tolerance))
    return result
