#!/usr/bin/env python3
"""
测试标量逆谱问题：分支条件、逐层合成与回代
"""

from pathlib import Path

import numpy as np
import pytest

from core.errors import BranchConditionError
from core.quadrature import QuadGrid
from inverse import BranchSpec, OperatorSynthesizer, synthesize_operator, validate_branches, verify_roundtrip
from spectrum import SpectrumOptions
from specfile import load_branches


SPECS = Path(__file__).resolve().parent.parent / "specs"


@pytest.fixture(scope="module")
def example_branches():
    return BranchSpec.from_strings(["k1*k2", "0.5+k2", "2"], name="example1",
                                   candidates={1: "k2/ln(1+2*k2)"})


@pytest.fixture(scope="module")
def example_report(example_branches):
    return OperatorSynthesizer(example_branches, QuadGrid(32)).synthesize()


class TestBranchConditions:

    def test_example_passes(self, example_branches):
        report = validate_branches(example_branches)
        assert report.passed
        assert report.min_distance[1] == pytest.approx(0.5, abs=1e-12)
        assert report.min_distance[2] == pytest.approx(0.5, abs=1e-12)
        assert report.continuity[0] > 0

    def test_overlap_reported(self):
        """λ₁ = k₂/2 落在 λ₀ 的投影 [0, k₂] 内"""
        b = BranchSpec.from_strings(["k1*k2", "0.5*k2", "2"])
        report = validate_branches(b, probe_grid=9)
        assert not report.passed
        assert report.min_distance[1] == 0.0
        assert all(item["level"] == 1 for item in report.offending)
        assert len(report.offending) == 9

    def test_dependence_violation(self):
        b = BranchSpec.from_strings(["k1*k2", "k1+k2", "2"])
        report = validate_branches(b)
        assert not report.passed
        assert "k1" in report.errors[0]

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            BranchSpec.from_strings(["1"])
        with pytest.raises(ValueError):
            BranchSpec.from_dict({"N": 3, "branches": ["k1", "1"]})
        with pytest.raises(ValueError):
            BranchSpec.from_strings(["k1*k2", "i*k2", "2"]).evaluate(1, np.array([[0.5]]))

    def test_branch_files(self):
        assert validate_branches(load_branches(SPECS / "example1_branches.json")).passed
        assert not validate_branches(load_branches(SPECS / "overlapping_branches.json")).passed


class TestSynthesis:
    """A₁ = k₂/ln(1+2k₂)，A₂ ≈ 0.9353"""

    def test_first_level_matches_closed_form(self, example_report):
        assert example_report.candidate_errors[1] < 1e-8
        grid = QuadGrid(32)
        expected = grid.nodes / np.log(1 + 2 * grid.nodes)
        np.testing.assert_allclose(example_report.tables[1][:, 0, 0], expected, atol=1e-8)

    def test_top_level_constant(self, example_report):
        assert example_report.tables[2].shape == (1, 1)
        assert float(example_report.tables[2][0, 0]) == pytest.approx(0.9353147842283, abs=1e-5)

    def test_monotonicity_brackets(self, example_report):
        assert example_report.bracket_failures == []
        assert example_report.validation.passed

    def test_synthesized_operator_shape(self, example_report):
        spec = example_report.spec
        assert (spec.N, spec.M) == (2, 1)
        assert spec.self_adjoint

    def test_overlap_raises(self):
        b = BranchSpec.from_strings(["k1*k2", "0.5*k2", "2"])
        with pytest.raises(BranchConditionError) as info:
            synthesize_operator(b, QuadGrid(8))
        assert not info.value.report.passed


@pytest.mark.slow
def test_roundtrip(example_branches):
    grid = QuadGrid(16)
    spec = synthesize_operator(example_branches, grid)
    report = verify_roundtrip(example_branches, spec, grid, SpectrumOptions(kgrid=17, scan_points=800))
    assert report.passed, report.to_dict()
    assert report.missing[1] == 0
