#!/usr/bin/env python3
"""
测试命令行：子命令输出与退出码
"""

import json
from pathlib import Path

import pytest

from cli import main
from cli.main import EXIT_BRANCH, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION
from data.artifacts import read_csv, read_json


SPECS = Path(__file__).resolve().parent.parent / "specs"
SMALL = ["--qnodes", "16", "--kgrid", "9", "--lscan", "300"]


def write_json_file(path: Path, data) -> Path:
    path.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
    return path


class TestValidate:

    def test_valid_spec(self, capsys):
        assert main(["validate", str(SPECS / "example1.json")]) == EXIT_OK
        assert "规格有效" in capsys.readouterr().out

    def test_dependence_violation(self, tmp_path):
        path = write_json_file(tmp_path / "bad.json", {"N": 1, "M": 1, "A": [[["k1"]], [["k1"]]]})
        assert main(["validate", str(path)]) == EXIT_VALIDATION

    def test_malformed_json(self, tmp_path, capsys):
        path = write_json_file(tmp_path / "broken.json", '{"N": 1, "M": 1,')
        assert main(["validate", str(path)]) == EXIT_VALIDATION
        assert "JSON格式错误" in capsys.readouterr().out

    def test_json_report(self, capsys):
        main(["validate", str(SPECS / "graphene.json"), "--json"])
        assert '"passed": true' in capsys.readouterr().out


class TestInverse:

    def test_overlapping_branches(self, tmp_path, capsys):
        out = tmp_path / "op.json"
        code = main(["inverse", str(SPECS / "overlapping_branches.json"), "--qnodes", "8", "--out", str(out)])
        assert code == EXIT_BRANCH
        diagnostic = read_json(tmp_path / "op.error.json")
        assert diagnostic["error"] == "branch_condition"
        assert diagnostic["offending"]
        assert '"branch_condition"' in capsys.readouterr().err
        assert not out.exists()

    def test_synthesis(self, tmp_path):
        out = tmp_path / "op.json"
        code = main(["inverse", str(SPECS / "example1_branches.json"), "--qnodes", "16",
                     "--no-roundtrip", "--out", str(out)])
        assert code == EXIT_OK
        assert main(["validate", str(out)]) == EXIT_OK
        report = read_json(tmp_path / "op.report.json")
        assert report["A_N"] == pytest.approx(0.9353147842283, abs=1e-5)
        assert report["synthesis"]["candidate_errors"]["1"] < 1e-8


class TestSpectrum:

    def test_example_outputs(self, tmp_path):
        out = tmp_path / "run"
        assert main(["spectrum", str(SPECS / "example1.json"), *SMALL, "--out", str(out)]) == EXIT_OK
        for level in range(3):
            assert (out / f"sigma_{level}.csv").exists()
        frame, metadata = read_csv(out / "sigma_1.csv")
        assert metadata == {"version": "0.1.0", "Q": "16", "grid": "9", "scan": "300"}
        assert list(frame.columns) == ["k2", "level", "branch", "lambda"]
        summary = read_json(out / "summary.json")
        assert summary["eigenvalues"] == pytest.approx([2.0], abs=1e-5)
        assert summary["disjointness_margin"]["2"] > 0.3

    def test_missing_spec(self, tmp_path):
        assert main(["spectrum", "--out", str(tmp_path)]) == EXIT_VALIDATION

    def test_branches_level_out_of_range(self, tmp_path):
        code = main(["branches", str(SPECS / "example1.json"), "--level", "5", "--out", str(tmp_path / "b.csv")])
        assert code == EXIT_VALIDATION

    def test_branches_graphene(self, tmp_path):
        out = tmp_path / "sigma0.csv"
        code = main(["branches", "--model", "graphene", "--level", "0", "--kgrid", "9", "--out", str(out)])
        assert code == EXIT_OK
        frame, _ = read_csv(out)
        assert len(frame) == 2 * 81

    @pytest.mark.slow
    def test_outputs_independent_of_threads(self, tmp_path):
        """线程数不同，CSV逐字节相同"""
        for threads in ("1", "3"):
            main(["spectrum", str(SPECS / "example1.json"), *SMALL, "--threads", threads,
                  "--out", str(tmp_path / threads)])
        for level in range(3):
            name = f"sigma_{level}.csv"
            assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "3" / name).read_bytes()


class TestResolvent:

    def test_lattice_site(self, tmp_path):
        out = tmp_path / "u.json"
        code = main(["resolvent", "--model", "graphene", "--v1", "2", "--v2", "1", "--qnodes", "8",
                     "--lambda", "5", "0", "--site", "0", "0", "1", "--samples", str(tmp_path / "u.csv"),
                     "--out", str(out)])
        assert code == EXIT_OK
        report = read_json(out)
        assert report["residual"] < 1e-8
        frame, _ = read_csv(tmp_path / "u.csv", complex_columns=("value",))
        assert len(frame) == 32

    def test_proximity_exit_code(self, tmp_path):
        spec = write_json_file(tmp_path / "const.json", {"N": 1, "M": 1, "A": [[["1"]], [["0.5"]]]})
        out = tmp_path / "u.json"
        code = main(["resolvent", str(spec), "--qnodes", "4", "--lambda", "1", "0", "--source", "1",
                     "--out", str(out)])
        assert code == EXIT_NUMERICAL
        diagnostic = read_json(tmp_path / "u.error.json")
        assert diagnostic["error"] == "spectral_proximity"
        assert diagnostic["nearest_component"] == 0

    def test_margin_exit_code(self, tmp_path):
        out = tmp_path / "u.json"
        code = main(["resolvent", "--model", "graphene", "--v1", "2", "--v2", "1", "--qnodes", "8",
                     "--lambda", "1", "0", "--source", "1", "1", "--out", str(out)])
        assert code == EXIT_NUMERICAL
        assert not out.exists()
        diagnostic = read_json(tmp_path / "u.error.json")
        assert diagnostic["error"] == "quadrature_margin"
        assert diagnostic["nearest_component"] == 0
        assert diagnostic["delta"] == pytest.approx(1e-6)

    def test_margin_delta_flag(self, tmp_path):
        out = tmp_path / "u.json"
        code = main(["resolvent", "--model", "graphene", "--v1", "2", "--v2", "1", "--qnodes", "8",
                     "--lambda", "1", "0.01", "--source", "1", "1", "--delta", "0.1", "--out", str(out)])
        assert code == EXIT_NUMERICAL
        assert read_json(tmp_path / "u.error.json")["delta"] == pytest.approx(0.1)

    def test_bad_site(self, tmp_path):
        code = main(["resolvent", "--model", "graphene", "--lambda", "5", "0", "--site", "0", "1",
                     "--qnodes", "4", "--out", str(tmp_path / "u.json")])
        assert code == EXIT_VALIDATION


class TestGraphene:

    def test_graphene_tables(self, tmp_path):
        out = tmp_path / "g"
        code = main(["graphene", "--v2", "200", "--points", "4", "--kgrid", "8", "--qnodes", "8",
                     "--lrange", "195", "205", "--lcount", "11", "--out", str(out)])
        assert code == EXIT_OK
        assert {p.name for p in out.iterdir()} == {"dispersion.csv", "projection.csv", "d_loc.csv"}
        frame, _ = read_csv(out / "projection.csv")
        assert len(frame) == 9

    def test_oracle(self, tmp_path):
        out = tmp_path / "torus.csv"
        assert main(["oracle", "-P", "4", "--out", str(out)]) == EXIT_OK
        frame, metadata = read_csv(out)
        assert len(frame) == 32
        assert metadata["P"] == "4"
        assert frame["lambda"].is_monotonic_increasing
