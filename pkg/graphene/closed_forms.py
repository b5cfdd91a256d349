"""
带线缺陷与点缺陷的石墨烯：闭式结果（仅作校验用）
"""

import numpy as np


def _cos2(k2):
    """cos²πk₂"""
    return np.cos(np.pi * np.asarray(k2, dtype=float)) ** 2


def closed_form_sigma0(k) -> tuple:
    """
    传播色散面 λ± = ±√(3 + 2cos2πk₁ + 2cos2πk₂ + 2cos2π(k₁−k₂))

    Args:
        k: (..., 2) 的k点

    Returns:
        (λ₋, λ₊)
    """
    k = np.asarray(k, dtype=float)
    k1, k2 = k[..., 0], k[..., 1]
    radicand = 3.0 + 2.0 * np.cos(2 * np.pi * k1) + 2.0 * np.cos(2 * np.pi * k2) \
        + 2.0 * np.cos(2 * np.pi * (k1 - k2))
    root = np.sqrt(np.maximum(radicand, 0.0))
    return -root, root


def closed_form_projection(k2) -> np.ndarray:
    """
    传播色散面在 (λ, k₂) 平面上投影的四条边界曲线 ±√(3 + 2cos2πk₂ ± 4cosπk₂)

    Returns:
        形状 (..., 4) 的升序数组
    """
    k2 = np.asarray(k2, dtype=float)
    c = np.cos(np.pi * k2)
    base = 3.0 + 2.0 * np.cos(2 * np.pi * k2)
    outer = np.sqrt(np.maximum(base + 4.0 * np.abs(c), 0.0))
    inner = np.sqrt(np.maximum(base - 4.0 * np.abs(c), 0.0))
    return np.stack([-outer, -inner, inner, outer], axis=-1)


def closed_form_guided(k2, V1: float) -> np.ndarray:
    """
    导波色散曲线的 λ² 候选

    λ² = (2(1+4cos²πk₂) + V₁² ± √(64cos²πk₂ + 4(1+4cos²πk₂)V₁² + V₁⁴)) / 2

    Returns:
        形状 (..., 2)，依次为取 − 与取 + 的候选
    """
    c2 = _cos2(k2)
    alpha = 1.0 + 4.0 * c2
    root = np.sqrt(64.0 * c2 + 4.0 * alpha * V1 ** 2 + V1 ** 4)
    base = 2.0 * alpha + V1 ** 2
    return np.stack([(base - root) / 2.0, (base + root) / 2.0], axis=-1)


def guided_candidates(k2, V1: float) -> np.ndarray:
    """λ 候选：对非负的 λ² 候选取 ±√，升序"""
    squares = np.atleast_1d(closed_form_guided(k2, V1))
    roots = np.sqrt(squares[squares >= 0])
    return np.sort(np.concatenate([-roots, roots]))


def closed_form_g1(lam: float, k2: float, V1: float) -> float:
    """
    G₁ 左上元：1 − V₁λ·sgn(λ² − α)/√((λ² − α)² − β²)

    α = 1 + 4cos²πk₂，β = 4|cosπk₂|；λ 在投影之外时有定义。
    λ 在投影上方（λ² > α + β）时符号取负。
    """
    c2 = float(_cos2(k2))
    alpha = 1.0 + 4.0 * c2
    z = lam * lam - alpha
    radicand = z * z - 16.0 * c2
    if radicand <= 0:
        raise ValueError(f"λ={lam} 落在 k₂={k2} 的投影内")
    return 1.0 - V1 * lam * np.sign(z) / np.sqrt(radicand)
