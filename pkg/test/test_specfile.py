#!/usr/bin/env python3
"""
测试规格文件读写与校验
"""

import json
from pathlib import Path

import numpy as np
import pytest

from core.errors import SpecValidationError
from core.operator import ExprCoefficient, OperatorSpec, TabulatedCoefficient
from specfile import SpecFile, SpecValidator, load_branches, load_spec, save_spec


SPECS = Path(__file__).resolve().parent.parent / "specs"


def write_spec(tmp_path: Path, data, name: str = "spec.json") -> Path:
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
    return path


def scalar_spec(*levels, hint=True):
    return {"N": len(levels) - 1, "M": 1, "A": [[[text]] for text in levels], "self_adjoint_hint": hint}


class TestLoading:

    def test_load_bundled_specs(self):
        example = load_spec(SPECS / "example1.json")
        assert (example.N, example.M) == (2, 1)
        assert example.name == "example1"
        graphene = load_spec(SPECS / "graphene.json")
        assert graphene.M == 2
        assert graphene.self_adjoint

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecValidationError) as info:
            load_spec(tmp_path / "absent.json")
        assert "文件不存在" in info.value.errors[0]

    def test_malformed_json_reports_position(self, tmp_path):
        path = write_spec(tmp_path, '{"N": 1,\n "M": 1,\n "A": [}')
        with pytest.raises(SpecValidationError) as info:
            load_spec(path)
        assert "行 3" in info.value.errors[0]

    @pytest.mark.parametrize("data,fragment", [
        ({"M": 1, "A": []}, "N"),
        ({"N": 1, "M": 0, "A": []}, "M"),
        ({"N": 2, "M": 1, "A": [[["1"]], [["1"]]]}, "N+1"),
        ({"N": 1, "M": 2, "A": [[["1"]], [["1"]]]}, "2×2"),
        ({"N": 1, "M": 1, "A": [[[True]], [["1"]]]}, "A_0[0][0]"),
        ({"N": 1, "M": 1, "A": [[["1"]], [["1"]]], "self_adjoint_hint": "yes"}, "self_adjoint_hint"),
    ])
    def test_structural_errors(self, tmp_path, data, fragment):
        with pytest.raises(SpecValidationError) as info:
            load_spec(write_spec(tmp_path, data))
        assert any(fragment in error for error in info.value.errors)

    def test_expression_syntax_error(self, tmp_path):
        with pytest.raises(SpecValidationError) as info:
            load_spec(write_spec(tmp_path, scalar_spec("k1*", "1")))
        assert info.value.errors[0].startswith("A_0")

    def test_numbers_accepted_as_entries(self, tmp_path):
        spec = load_spec(write_spec(tmp_path, {"N": 1, "M": 1, "A": [[["k1"]], [[0.5]]]}))
        assert spec.evaluate(1, np.array([[0.3]]))[0, 0, 0] == pytest.approx(0.5)

    def test_branch_file_errors(self, tmp_path):
        with pytest.raises(SpecValidationError):
            load_branches(write_spec(tmp_path, {"branches": ["1"]}))
        with pytest.raises(SpecValidationError):
            load_branches(write_spec(tmp_path, {"N": 1}))


class TestSaving:

    def test_expression_round_trip(self, tmp_path):
        spec = load_spec(SPECS / "graphene.json")
        save_spec(spec, tmp_path / "copy.json")
        restored = load_spec(tmp_path / "copy.json")
        points = spec.probe_points()
        for j in range(3):
            np.testing.assert_allclose(restored.evaluate(j, points), spec.evaluate(j, points), atol=1e-15)

    def test_tabulated_round_trip(self, tmp_path):
        axis = np.linspace(0.1, 0.9, 5)
        table = (axis / (1 + axis)).reshape(5, 1, 1)
        spec = OperatorSpec(2, 1, [
            ExprCoefficient.from_strings(0, [["k1*k2"]], 2),
            TabulatedCoefficient(1, 2, [axis], table),
            TabulatedCoefficient(2, 2, [], np.array([[0.75]])),
        ], name="tabulated")
        save_spec(spec, tmp_path / "tabulated.json")
        data = json.loads((tmp_path / "tabulated.json").read_text(encoding="utf-8"))
        assert "tabulated" in data["A"][1]
        restored = load_spec(tmp_path / "tabulated.json")
        nodes = np.stack([np.full(5, 0.5), axis], axis=1)
        np.testing.assert_allclose(restored.evaluate(1, nodes)[:, 0, 0].real, table[:, 0, 0], atol=1e-15)
        assert restored.evaluate(2, nodes)[0, 0, 0] == pytest.approx(0.75)

    def test_spec_file_from_operator(self):
        spec = load_spec(SPECS / "example1.json")
        spec_file = SpecFile.from_operator(spec)
        assert spec_file.to_dict()["A"][1] == [["k2/ln(1+2*k2)"]]


class TestValidator:

    def test_bundled_specs_pass(self):
        for name in ("example1.json", "graphene.json"):
            report = SpecValidator.from_path(str(SPECS / name)).validate()
            assert report.passed, report.errors
            assert report.self_adjoint
            assert report.warnings == []

    def test_dependence_violation(self):
        report = SpecValidator(SpecFile.from_dict(scalar_spec("k1", "k1+1"))).validate()
        assert not report.passed
        assert any("A_1" in error and "k1" in error for error in report.errors)

    def test_expression_health(self):
        report = SpecValidator(SpecFile.from_dict(scalar_spec("k1", "1/(k1-k1)"))).validate()
        assert not report.passed
        assert any("求值失败" in error for error in report.errors)

    def test_hint_mismatch_is_warning(self):
        data = {"N": 1, "M": 2, "A": [[["0", "1"], ["0", "0"]], [["1", "0"], ["0", "1"]]],
                "self_adjoint_hint": True}
        report = SpecValidator(SpecFile.from_dict(data)).validate()
        assert report.passed
        assert not report.self_adjoint
        assert any("self_adjoint_hint" in warning for warning in report.warnings)

    def test_no_defect_warning(self):
        report = SpecValidator(SpecFile.from_dict(scalar_spec("k1", "0"))).validate()
        assert report.passed
        assert any("全为零" in warning for warning in report.warnings)

    def test_is_valid_and_dict(self):
        validator = SpecValidator(SpecFile.from_dict(scalar_spec("k1", "k1"), path="bad.json"))
        ok, errors = validator.is_valid()
        assert not ok and errors
        payload = validator.validate().to_dict()
        assert payload["path"] == "bad.json"
        assert payload["passed"] is False
