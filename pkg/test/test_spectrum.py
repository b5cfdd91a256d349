#!/usr/bin/env python3
"""
测试谱分量求解：σ₀、σ_j、σ_N 与区间运算
"""

import numpy as np
import pytest

from core.operator import OperatorSpec
from core.quadrature import QuadGrid
from graphene import build_graphene, closed_form_sigma0
from spectrum import (
    SpectrumOptions,
    SpectrumSolver,
    complement_in_window,
    default_window,
    distance_to_intervals,
    merge_intervals,
    tensor_grid,
)


EXAMPLE_ROWS = [[["k1*k2"]], [["k2/ln(1+2*k2)"]], [["0.9353147842283"]]]


def constant_spec(c: float, a: float) -> OperatorSpec:
    return OperatorSpec.from_strings(1, [[[repr(c)]], [[repr(a)]]], name="constants")


@pytest.fixture(scope="module")
def example_solver():
    spec = OperatorSpec.from_strings(2, EXAMPLE_ROWS, name="example1")
    options = SpectrumOptions(kgrid=17, scan_points=400)
    return SpectrumSolver(spec, QuadGrid(32), options)


# ==================== 区间运算 ====================
def test_merge_and_complement():
    assert merge_intervals([(2, 3), (0, 1), (0.5, 1.5)]) == [(0.0, 1.5), (2.0, 3.0)]
    assert merge_intervals([(0, 1), (1.1, 2)], gap=0.2) == [(0.0, 2.0)]
    allowed = complement_in_window((-2, 4), [(0, 1), (3, 5)])
    assert allowed == [(-2, 0.0), (1.0, 3.0)]
    assert distance_to_intervals(2.5, [(0, 1), (3, 4)]) == pytest.approx(0.5)
    assert distance_to_intervals(0.5, [(0, 1)]) == 0.0


def test_tensor_grid_layout():
    grid = tensor_grid(3, 2)
    assert grid.shape == (9, 2)
    np.testing.assert_allclose(grid[:3, 1], [0.0, 0.5, 1.0])
    assert tensor_grid(5, 0).shape == (1, 0)


def test_default_window_bounds_levels():
    spec = OperatorSpec.from_strings(2, EXAMPLE_ROWS)
    lo1, hi1 = default_window(spec, 1)
    lo2, hi2 = default_window(spec, 2)
    assert lo1 == -hi1
    assert hi2 > hi1 > 1.5


# ==================== σ₀ ====================
class TestSigmaZero:
    """石墨烯传播色散面"""

    def test_eigen_roots_match_closed_form(self):
        solver = build_graphene().solver()
        points = tensor_grid(64, 2)
        roots = solver.eigen_roots(points)
        minus, plus = closed_form_sigma0(points)
        # 比较平方：Dirac点附近开方会放大舍入误差
        np.testing.assert_allclose(roots[:, 0] ** 2, minus ** 2, atol=1e-10)
        np.testing.assert_allclose(roots[:, 1] ** 2, plus ** 2, atol=1e-10)
        assert np.all(roots[:, 0] <= 0) and np.all(roots[:, 1] >= 0)

    def test_dirac_point(self):
        solver = build_graphene().solver()
        roots = solver.eigen_roots(np.array([[1 / 3, 2 / 3]]))
        assert np.abs(roots).max() < 1e-7

    def test_hull(self):
        """k=(0,0) 处 λ=±3；两个分支在 Dirac 点相接"""
        solver = build_graphene().solver(SpectrumOptions(kgrid=127))
        component = solver.sigma0()
        merged = merge_intervals(component.hull, gap=1e-6)
        assert len(merged) == 1
        assert merged[0][0] == pytest.approx(-3.0, abs=1e-3)
        assert merged[0][1] == pytest.approx(3.0, abs=1e-3)
        assert len(component.branches) == 2

    def test_scalar_level_zero(self, example_solver):
        component = example_solver.sigma0()
        assert component.hull[0][0] == pytest.approx(0.0, abs=1e-12)
        assert component.hull[-1][1] == pytest.approx(1.0, abs=1e-12)


# ==================== σ_j / σ_N ====================
class TestExample:
    """A₀ = k1k2，A₁ = k2/ln(1+2k2)，A₂ 常数：三层分量互不相交"""

    def test_sigma_one(self, example_solver):
        component = example_solver.sigma_j(1)
        assert len(component.hull) == 1
        lo, hi = component.hull[0]
        assert lo == pytest.approx(0.5, abs=1e-6)
        assert hi == pytest.approx(1.5, abs=1e-6)

    def test_sigma_one_branch_is_linear(self, example_solver):
        """λ₁(k₂) = 0.5 + k₂"""
        frame = example_solver.sigma_j(1).to_frame()
        np.testing.assert_allclose(frame["lambda"], 0.5 + frame["k2"], atol=1e-6)

    def test_sigma_two(self, example_solver):
        eigenvalues = example_solver.sigma_N_eigenvalues()
        assert len(eigenvalues) == 1
        assert eigenvalues[0] == pytest.approx(2.0, abs=1e-6)

    def test_disjointness_margin(self, example_solver):
        component = example_solver.sigma_N()
        assert component.margin > 0.4
        assert component.eigenvalues() == pytest.approx([2.0], abs=1e-6)

    def test_sigma_j_rejects_top_level(self, example_solver):
        with pytest.raises(ValueError):
            example_solver.sigma_j(2)


class TestConstants:
    """N=1 常数系数：σ₀ = {c}，σ₁ = {c + a}"""

    @pytest.mark.parametrize("c,a", [(1.0, 0.5), (1.0, -0.25), (-0.3, 2.0)])
    def test_single_eigenvalue(self, c, a):
        solver = SpectrumSolver(constant_spec(c, a), QuadGrid(4), SpectrumOptions(kgrid=9, scan_points=300))
        assert solver.sigma0().hull == [(pytest.approx(c), pytest.approx(c))]
        assert solver.sigma_N_eigenvalues() == [pytest.approx(c + a, abs=1e-9)]

    def test_zero_top_coefficient_has_no_eigenvalue(self):
        """A_N = 0 时 λ=c 被排除，不报告任何根"""
        solver = SpectrumSolver(constant_spec(1.0, 0.0), QuadGrid(4), SpectrumOptions(kgrid=9, scan_points=300))
        assert solver.sigma_N_eigenvalues() == []


class TestGrapheneLineDefect:
    """V₁=2，k₂=1/2 处投影退化为 ±1，det G₁ 的根为 1±√2"""

    @pytest.mark.parametrize("use_gbar", [False, True])
    def test_roots_at_half(self, use_gbar):
        solver = build_graphene(2.0, 0.0).solver(SpectrumOptions(kgrid=33, scan_points=800, use_gbar=use_gbar),
                                                QuadGrid(64))
        roots = [record.lam for record in solver.scan_point(1, [0.5])]
        assert roots == pytest.approx([1 - np.sqrt(2), 1 + np.sqrt(2)], abs=1e-8)

    def test_records_carry_metadata(self):
        solver = build_graphene(2.0, 0.0).solver(SpectrumOptions(kgrid=33, scan_points=800), QuadGrid(64))
        for record in solver.scan_point(1, [0.5]):
            assert record.residual < 1e-9
            assert record.method == "det-scan"
            assert record.margin > 0.5


@pytest.mark.slow
def test_full_spectrum_example(example_solver):
    components = example_solver.full_spectrum()
    assert [component.level for component in components] == [0, 1, 2]
    assert components[2].eigenvalues() == pytest.approx([2.0], abs=1e-6)
