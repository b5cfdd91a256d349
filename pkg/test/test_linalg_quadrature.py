#!/usr/bin/env python3
"""
测试小矩阵内核与Gauss–Legendre积分
"""

import numpy as np
import pytest

from core.errors import IntegrandError
from core.linalg import (
    RCOND_THRESHOLD,
    adjoint,
    batched_det,
    batched_inverse,
    hermitian_defect,
    lu_det_inv,
)
from core.quadrature import QuadGrid, integrate_axis, integrate_box, integrate_with_error


# ==================== linalg ====================
def test_lu_det_inv_small():
    result = lu_det_inv([[2, 1], [1, 3]])
    assert result.det == pytest.approx(5.0)
    np.testing.assert_allclose(result.inv, np.array([[3, -1], [-1, 2]]) / 5.0, atol=1e-15)
    assert not result.singular


def test_lu_det_inv_singular():
    result = lu_det_inv([[1, 2], [2, 4]])
    assert result.singular
    assert result.inv is None
    assert abs(result.det) < 1e-12


def test_lu_det_inv_complex_and_permuted():
    """需要行交换的矩阵，行列式符号正确"""
    A = np.array([[0, 1j], [2, 1]], dtype=complex)
    result = lu_det_inv(A)
    assert result.det == pytest.approx(np.linalg.det(A))
    np.testing.assert_allclose(result.inv @ A, np.eye(2), atol=1e-14)


def test_lu_det_inv_rejects_non_square():
    with pytest.raises(ValueError):
        lu_det_inv(np.zeros((2, 3)))


def test_hermitian_defect():
    assert hermitian_defect([[1, 1j], [-1j, 2]]) == 0.0
    assert hermitian_defect([[1, 1j], [1j, 2]]) == pytest.approx(2.0)


def test_batched_inverse_and_rcond():
    rng = np.random.default_rng(3)
    stack = rng.standard_normal((4, 5, 3, 3)) + 1j * rng.standard_normal((4, 5, 3, 3))
    inv, rcond = batched_inverse(stack)
    assert rcond.shape == (4, 5)
    np.testing.assert_allclose(stack @ inv, np.broadcast_to(np.eye(3), stack.shape), atol=1e-10)
    assert np.all(rcond > RCOND_THRESHOLD)


def test_batched_inverse_singular_member():
    """精确奇异的成员 rcond 为0，其余成员不受影响"""
    stack = np.array([np.eye(2), np.zeros((2, 2)), 2 * np.eye(2)], dtype=complex)
    inv, rcond = batched_inverse(stack)
    assert rcond[1] == 0.0
    np.testing.assert_allclose(inv[2], 0.5 * np.eye(2))


def test_batched_det_and_adjoint():
    stack = np.array([[[1, 2j], [3, 4]], [[0, 1], [1, 0]]], dtype=complex)
    np.testing.assert_allclose(batched_det(stack), [4 - 6j, -1])
    np.testing.assert_allclose(adjoint(stack)[0], stack[0].conj().T)


# ==================== quadrature ====================
def test_weights_sum_to_one():
    for Q in (1, 8, 64):
        grid = QuadGrid(Q)
        assert grid.weights.sum() == pytest.approx(1.0, abs=1e-14)
        assert np.all((grid.nodes > 0) & (grid.nodes < 1))


def test_integral_log_closed_form():
    """∫₀¹ dk₁/(k₁k₂ − 0.5 − k₂) 在 k₂=1 处为 −ln3"""
    grid = QuadGrid(64)
    value = integrate_axis(lambda k: 1.0 / (k[0] * k[1] - 0.5 - k[1]), (1.0,), grid)
    assert value.real == pytest.approx(-np.log(3.0), abs=1e-10)


def test_integral_second_closed_form():
    """∫₀¹ dk₁/(k₁k₂ − 2) 在 k₂=1 处为 ln(1 − 0.5)"""
    grid = QuadGrid(64)
    value = integrate_axis(lambda k: 1.0 / (k[0] * k[1] - 2.0), (1.0,), grid)
    assert value.real == pytest.approx(np.log(0.5), abs=1e-10)


def test_integrate_box_matches_nested_axis():
    """dims=2 的张量规则等于两次一维积分"""
    grid = QuadGrid(16)

    def f(k):
        return np.array([[np.exp(k[0]) * np.cos(k[1])]])

    box = integrate_box(f, 2, grid)
    expected = (np.e - 1.0) * np.sin(1.0)
    assert box[0, 0].real == pytest.approx(expected, abs=1e-13)


def test_integrate_with_error_estimate():
    grid = QuadGrid(8)
    value, error = integrate_with_error(lambda k: np.array(k[0] ** 3), 1, grid)
    assert value.real == pytest.approx(0.25, abs=1e-14)
    assert error < 1e-14


def test_example_final_integrand():
    """ln(1+2k)ln(1−0.5k)/(k ln(1+1.5k−k²)) 的积分约为 −1/0.935"""
    grid = QuadGrid(128)

    def f(k):
        x = k[0]
        return np.log(1 + 2 * x) * np.log(1 - 0.5 * x) / (x * np.log(1 + 1.5 * x - x * x))

    value = integrate_axis(f, (), grid)
    assert value.real == pytest.approx(-1.0695, abs=5e-3)


def test_integrand_failure_reports_node():
    grid = QuadGrid(4)

    def bad(k):
        raise ValueError("boom")

    with pytest.raises(IntegrandError) as info:
        integrate_axis(bad, (0.3,), grid)
    assert info.value.node[0] == pytest.approx(grid.nodes[0])
    assert info.value.node[1] == 0.3


def test_average_is_order_fixed():
    """沿轴平均与线程无关：同一输入两次结果逐位相同"""
    grid = QuadGrid(32)
    values = np.random.default_rng(1).standard_normal((32, 5))
    first = grid.average(values, axis=0)
    second = grid.average(values.copy(), axis=0)
    assert np.array_equal(first, second)
    assert first == pytest.approx(grid.weights @ values)


def test_tensor_points_layout():
    """最后一个网格轴对应 k₁"""
    grid = QuadGrid(3)
    points = grid.tensor_points(2)
    assert points.shape == (3, 3, 2)
    np.testing.assert_allclose(points[0, :, 0], grid.nodes)
    np.testing.assert_allclose(points[:, 0, 1], grid.nodes)
