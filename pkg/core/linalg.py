"""
稠密复矩阵内核
面向小规模M（石墨烯M=2）：LU行列式与逆、条件数估计、Hermite偏差，以及引擎使用的批量版本
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve


logger = logging.getLogger(__name__)

# rcond低于该阈值视为数值奇异
RCOND_THRESHOLD = 1e-14

CMatrix = np.ndarray


@dataclass
class LUResult:
    """lu_det_inv 的结果，奇异时 inv 为 None"""
    det: complex
    inv: Optional[CMatrix]
    rcond: float
    singular: bool

    def __repr__(self):
        return f"LUResult(det={self.det}, rcond={self.rcond:.3e}, singular={self.singular})"


def _as_square(A) -> np.ndarray:
    matrix = np.asarray(A, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"需要方阵，实际形状为 {matrix.shape}")
    return matrix


def lu_det_inv(A, threshold: float = RCOND_THRESHOLD) -> LUResult:
    """
    部分主元LU分解，同时给出行列式、逆矩阵和1-范数倒数条件数

    Args:
        A: 方阵
        threshold: rcond低于该值时不返回逆矩阵

    Returns:
        LUResult
    """
    matrix = _as_square(A)
    n = matrix.shape[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(matrix, check_finite=False)
    diagonal = np.diag(lu)
    swaps = np.count_nonzero(piv != np.arange(n))
    det = complex(np.prod(diagonal) * (-1) ** swaps)

    if np.any(diagonal == 0):
        return LUResult(det, None, 0.0, True)

    inv = lu_solve((lu, piv), np.eye(n, dtype=complex), check_finite=False)
    norm_a = np.linalg.norm(matrix, 1)
    norm_inv = np.linalg.norm(inv, 1)
    rcond = float(1.0 / (norm_a * norm_inv)) if norm_a > 0 and np.isfinite(norm_inv) else 0.0
    if rcond < threshold:
        return LUResult(det, None, rcond, True)
    return LUResult(det, inv, rcond, False)


def hermitian_defect(A) -> float:
    """A − A* 的最大模"""
    matrix = _as_square(A)
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def adjoint(A: np.ndarray) -> np.ndarray:
    """批量Hermite共轭（交换最后两个轴）"""
    return np.conj(np.swapaxes(A, -1, -2))


# ==================== 批量版本 ====================
def batched_inverse(stack: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    对形状 (..., M, M) 的矩阵栈求逆

    Returns:
        (inv, rcond)，rcond形状为 (...)；精确奇异的成员逐个回退到lu_det_inv，
        其逆为NaN、rcond为0
    """
    stack = np.asarray(stack, dtype=complex)
    try:
        inv = np.linalg.inv(stack)
    except np.linalg.LinAlgError:
        logger.debug("批量求逆遇到精确奇异矩阵，退回逐个求逆")
        flat = stack.reshape((-1,) + stack.shape[-2:])
        inv = np.empty_like(flat)
        for index, matrix in enumerate(flat):
            result = lu_det_inv(matrix, threshold=0.0)
            inv[index] = np.nan if result.inv is None else result.inv
        inv = inv.reshape(stack.shape)
    rcond = batched_rcond(stack, inv)
    return inv, rcond


def batched_rcond(stack: np.ndarray, inv: np.ndarray) -> np.ndarray:
    """1/(‖A‖₁‖A⁻¹‖₁)，非有限的逆给出0"""
    norm_a = np.abs(stack).sum(axis=-2).max(axis=-1)
    norm_inv = np.abs(inv).sum(axis=-2).max(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rcond = 1.0 / (norm_a * norm_inv)
    return np.where(np.isfinite(rcond), rcond, 0.0)


def batched_det(stack: np.ndarray) -> np.ndarray:
    return np.linalg.det(np.asarray(stack, dtype=complex))
