"""
嵌套积分 ⟨·⟩_{i,j}：[0,1]上的Gauss–Legendre张量积规则
求和顺序固定为节点下标升序，结果与线程数无关
"""

from dataclasses import dataclass, field
from typing import Callable, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import IntegrandError


KPoint = Tuple[float, ...]

DEFAULT_NODES = 64


@dataclass(frozen=True)
class QuadGrid:
    """[0,1]上的Q点Gauss–Legendre规则，权重和为1"""
    nodes_per_axis: int = DEFAULT_NODES
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.nodes_per_axis < 1:
            raise ValueError(f"每轴节点数必须 ≥ 1: {self.nodes_per_axis}")
        x, w = leggauss(self.nodes_per_axis)
        nodes = 0.5 * (x + 1.0)
        weights = 0.5 * w
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def Q(self) -> int:
        return self.nodes_per_axis

    def refined(self) -> "QuadGrid":
        """节点数加倍的规则，用于误差自检"""
        return QuadGrid(2 * self.nodes_per_axis)

    def average(self, values: np.ndarray, axis: int) -> np.ndarray:
        """
        沿一个节点轴做加权求和（即对该坐标积分）

        逐节点按升序累加，保证求和顺序固定。
        """
        moved = np.moveaxis(np.asarray(values), axis, 0)
        if moved.shape[0] != self.nodes_per_axis:
            raise ValueError(f"轴长度 {moved.shape[0]} 与节点数 {self.nodes_per_axis} 不一致")
        total = self.weights[0] * moved[0]
        for q in range(1, self.nodes_per_axis):
            total = total + self.weights[q] * moved[q]
        return total

    def tensor_points(self, dims: int) -> np.ndarray:
        """
        dims维张量节点，形状 (Q,)*dims + (dims,)

        轴顺序为 (k_dims, ..., k_1)，最后一个网格轴对应 k_1，
        展平后 k_1 变化最快。
        """
        axes = [self.nodes] * dims
        mesh = np.meshgrid(*axes, indexing="ij")
        # mesh[0] 对应最外层网格轴，即 k_dims
        return np.stack(mesh[::-1], axis=-1) if dims else np.zeros((0,))


def _accumulate(terms) -> np.ndarray:
    total = None
    for term in terms:
        total = term if total is None else total + term
    return total


def integrate_axis(
    f: Callable[[KPoint], np.ndarray],
    axis_fixed: Sequence[float],
    grid: QuadGrid,
) -> np.ndarray:
    """
    对第一个坐标积分：Σ w_q f(node_q, axis_fixed)

    Args:
        f: 输入k点（元组）返回矩阵的函数
        axis_fixed: 其余坐标的取值
        grid: 积分规则

    Returns:
        逐元素的加权和

    Raises:
        ValueError: 被积函数求值失败，消息中带出错节点
    """
    fixed = tuple(float(x) for x in axis_fixed)
    return _accumulate(_guarded_terms(f, fixed, grid))


def _guarded_terms(f, fixed: KPoint, grid: QuadGrid):
    for q in range(grid.nodes_per_axis):
        point = (float(grid.nodes[q]),) + fixed
        try:
            value = np.asarray(f(point), dtype=complex)
        except IntegrandError:
            raise
        except (ValueError, ArithmeticError) as exc:
            raise IntegrandError(point, exc) from exc
        yield grid.weights[q] * value


def integrate_box(
    f: Callable[[KPoint], np.ndarray],
    dims: int,
    grid: QuadGrid,
    axis_fixed: Sequence[float] = (),
) -> np.ndarray:
    """
    [0,1]^dims 上的张量积规则，k_1为最内层

    dims=1 时与 integrate_axis 完全相同（同一求和路径）。
    """
    if dims < 1:
        raise ValueError(f"积分维数必须 ≥ 1: {dims}")
    if dims == 1:
        return integrate_axis(f, axis_fixed, grid)

    fixed = tuple(float(x) for x in axis_fixed)

    def outer(point: KPoint) -> np.ndarray:
        # point = (k_dims,) + fixed；对内层 dims-1 个坐标积分
        return integrate_box(
            lambda inner: f(inner + point), dims - 1, grid, ()
        )

    return _accumulate(
        grid.weights[q] * outer((float(grid.nodes[q]),) + fixed)
        for q in range(grid.nodes_per_axis)
    )


def integrate_with_error(
    f: Callable[[KPoint], np.ndarray],
    dims: int,
    grid: QuadGrid,
) -> Tuple[np.ndarray, float]:
    """
    积分值与自检误差 |I_Q − I_2Q|

    对解析被积函数，加倍节点的变化量不超过该误差估计。
    """
    coarse = integrate_box(f, dims, grid)
    fine = integrate_box(f, dims, grid.refined())
    return fine, float(np.max(np.abs(fine - coarse)))
