"""
有限周期格（环面）直接对角化，作为连分式结果的独立校验

系数 A_j 的Fourier单项式给出格上的耦合：(p,q) 元中的 e^{2πi s·k}
把胞 n 的节点 p 与胞 n−s 的节点 q 相连（坐标取模 P）。
第 j 层缺陷只作用在子格 n₁=…=n_j=0 上，线缺陷在环面上闭合成环。
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core.operator import OperatorSpec


logger = logging.getLogger(__name__)

# Fourier 采样每轴点数，可分辨 |s| ≤ 7 的单项式
FOURIER_SAMPLES = 16
COEFFICIENT_CUTOFF = 1e-12


def decode_monomials(spec: OperatorSpec, level: int,
                     samples: int = FOURIER_SAMPLES) -> List[Tuple[Tuple[int, ...], np.ndarray]]:
    """
    用 FFT 把 A_level(k) 分解为三角多项式 Σ_s Â(s) e^{2πi s·k}

    Returns:
        [(s, Â(s))] 列表，s 的前 level 个分量为0

    Raises:
        ValueError: 系数不是 samples 可分辨的三角多项式
    """
    N = spec.N
    dims = N - level
    if dims == 0:
        constant = spec.evaluate_tail(level, np.zeros((1, 0)))[0]
        return [((0,) * N, constant)]
    axis = np.arange(samples) / samples
    mesh = np.stack(np.meshgrid(*([axis] * dims), indexing="ij"), axis=-1)
    values = spec.evaluate_tail(level, mesh)  # (samples,)*dims + (M, M)
    spectrum = np.fft.fftn(values, axes=tuple(range(dims))) / samples ** dims
    frequencies = np.round(np.fft.fftfreq(samples) * samples).astype(int)

    terms = []
    for index in np.ndindex(*spectrum.shape[:dims]):
        coefficient = spectrum[index]
        if np.max(np.abs(coefficient)) <= COEFFICIENT_CUTOFF:
            continue
        shift = (0,) * level + tuple(int(frequencies[i]) for i in index)
        terms.append((shift, coefficient))

    _check_reconstruction(spec, level, terms)
    return terms


def _check_reconstruction(spec: OperatorSpec, level: int, terms, tolerance: float = 1e-9):
    rng = np.random.default_rng(7)
    points = rng.uniform(0.0, 1.0, size=(16, spec.N))
    exact = spec.evaluate(level, points)
    rebuilt = np.zeros_like(exact)
    for shift, coefficient in terms:
        phase = np.exp(2j * np.pi * (points @ np.asarray(shift, dtype=float)))
        rebuilt += phase[:, None, None] * coefficient
    error = float(np.max(np.abs(rebuilt - exact)))
    if error > tolerance:
        raise ValueError(f"A_{level} 不是可分辨的三角多项式 (重构误差 {error:.3e})")


@dataclass
class TorusLattice:
    """P^N 个胞、每胞 M 个节点的有限周期格"""
    P: int
    N: int
    M: int
    matrix: np.ndarray

    @property
    def sites(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tolerance: float = 1e-12) -> bool:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) < tolerance

    def eigenvalues(self) -> np.ndarray:
        """升序特征值；Hermite 情形取实数"""
        if self.is_hermitian():
            return np.linalg.eigvalsh(self.matrix)
        values = np.linalg.eigvals(self.matrix)
        return values[np.lexsort((values.imag, values.real))]

    def degrees(self) -> np.ndarray:
        """每个格点的非对角耦合个数"""
        off_diagonal = self.matrix.copy()
        np.fill_diagonal(off_diagonal, 0.0)
        return (np.abs(off_diagonal) > COEFFICIENT_CUTOFF).sum(axis=1)


def torus_from_spec(spec: OperatorSpec, P: int, levels: Tuple[int, ...] = ()) -> TorusLattice:
    """
    由算子规格组装环面上的有限矩阵

    Args:
        spec: 系数为三角多项式的算子
        P: 每个方向的胞数，P ≥ 4
        levels: 只组装这些层（默认全部）
    """
    if P < 4:
        raise ValueError(f"环面尺寸 P 必须 ≥ 4: {P}")
    N, M = spec.N, spec.M
    cells = np.stack(np.meshgrid(*([np.arange(P)] * N), indexing="ij"), axis=-1).reshape(-1, N)
    n_cells = len(cells)
    matrix = np.zeros((n_cells, M, n_cells, M), dtype=complex)
    shape = (P,) * N

    for level in levels or range(N + 1):
        rows = np.flatnonzero(np.all(cells[:, :level] == 0, axis=1))
        for shift, coefficient in decode_monomials(spec, level):
            if max(abs(s) for s in shift) * 2 >= P:
                logger.warning(f"P={P} 过小，单项式 {shift} 会发生混叠")
            targets = np.mod(cells[rows] - np.asarray(shift), P)
            columns = np.ravel_multi_index(tuple(targets.T), shape)
            matrix[rows, :, columns, :] += coefficient
    lattice = TorusLattice(P, N, M, matrix.reshape(n_cells * M, n_cells * M))
    logger.info(f"环面 P={P}: {lattice.sites} 个格点")
    return lattice
