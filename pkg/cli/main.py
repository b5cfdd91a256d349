#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
lattice-cf 命令行入口

子命令: spectrum, branches, resolvent, inverse, validate, graphene, oracle
退出码: 0 成功, 2 规格校验失败, 3 数值失败, 4 分支条件不满足
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from core import json_helper
from core.errors import (
    BranchConditionError,
    ExprEvaluationError,
    InconsistentSpectralDataError,
    IntegrandError,
    QuadratureMarginError,
    SpecValidationError,
    SpectralProximityError,
)
from core.operator import OperatorSpec
from core.quadrature import QuadGrid
from data.artifacts import write_csv, write_json
from graphene import (
    build_graphene,
    compare_guided,
    d_loc_scan,
    dispersion_surface,
    projection_curves,
    torus_from_spec,
)
from inverse import OperatorSynthesizer, verify_roundtrip
from resolvent import FORMS, LatticeSite, source_response
from spectrum import SpectralComponent, SpectrumOptions, SpectrumSolver, default_window
from specfile import SpecValidator, load_branches, load_spec, save_spec
from utils.config import VERSION, Settings


logger = logging.getLogger("lattice_cf.cli")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_BRANCH = 4

NUMERICAL_ERRORS = (
    SpectralProximityError,
    QuadratureMarginError,
    InconsistentSpectralDataError,
    ExprEvaluationError,
    IntegrandError,
)

# 逆问题回代默认的λ扫描点数
ROUNDTRIP_SCAN_POINTS = 4000


# ==================== 公共工具 ====================
def _settings(args) -> Settings:
    return Settings.from_env().with_overrides(
        qnodes=getattr(args, "qnodes", None),
        kgrid=getattr(args, "kgrid", None),
        scan_points=getattr(args, "lscan", None),
        delta=getattr(args, "delta", None),
        root_tol=getattr(args, "root_tol", None),
        threads=getattr(args, "threads", None),
    )


def _options(args, settings: Settings) -> SpectrumOptions:
    window = tuple(args.lwindow) if getattr(args, "lwindow", None) else None
    return SpectrumOptions.from_settings(settings, window=window,
                                         use_gbar=getattr(args, "use_gbar", False) or None)


def _metadata(settings: Settings) -> Dict[str, Any]:
    """CSV末尾元数据，只含与线程数无关的量"""
    return {"version": VERSION, "Q": settings.qnodes, "grid": settings.kgrid, "scan": settings.scan_points}


def _load_operator(args) -> OperatorSpec:
    if getattr(args, "model", None) == "graphene":
        return build_graphene(args.v1, args.v2).spec
    if not getattr(args, "spec_file", None):
        raise SpecValidationError("<none>", ["需要规格文件或 --model graphene"])
    return load_spec(args.spec_file)


def _diagnostic_path(args) -> Optional[Path]:
    out = getattr(args, "out", None)
    if not out:
        return None
    out = Path(out)
    return out / "error.json" if getattr(args, "out_is_dir", False) else out.with_suffix(".error.json")


def _report_failure(args, payload: Dict[str, Any]):
    """诊断JSON写到标准错误，并在输出位置旁保存一份"""
    print(json_helper.dumps(payload, indent=2), file=sys.stderr)
    path = _diagnostic_path(args)
    if path is not None:
        write_json(payload, path)


def run_command(handler: Callable[[argparse.Namespace], int], args: argparse.Namespace) -> int:
    """执行子命令并把库异常映射为退出码"""
    try:
        return handler(args)
    except SpecValidationError as exc:
        print(f"❌ 规格校验失败: {exc.path}")
        for error in exc.errors:
            print(f"   - {error}")
        logger.error(str(exc))
        return EXIT_VALIDATION
    except BranchConditionError as exc:
        print(f"❌ {exc}")
        report = exc.report.to_dict() if hasattr(exc.report, "to_dict") else {}
        _report_failure(args, {"error": "branch_condition", **report})
        logger.error(str(exc))
        return EXIT_BRANCH
    except NUMERICAL_ERRORS as exc:
        print(f"❌ 数值失败: {exc}")
        payload = exc.to_dict() if hasattr(exc, "to_dict") else {
            "error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, (SpectralProximityError, QuadratureMarginError)):
            payload["nearest_component"] = exc.level
        _report_failure(args, payload)
        logger.error(str(exc))
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"❌ 参数错误: {exc}")
        logger.error(str(exc))
        return EXIT_VALIDATION


def _print_component(component: SpectralComponent, runtime: float):
    hull = ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in component.hull) or "∅"
    marker = "⚠️ " if component.dropped else "✅"
    print(f"{marker} σ_{component.level}: {hull}  ({len(component.branches)} 条分支, {runtime:.2f}s)")


# ==================== spectrum / branches ====================
def cmd_spectrum(args) -> int:
    """σ₀…σ_N 写成 sigma_j.csv，外加 summary.json"""
    settings = _settings(args)
    spec = _load_operator(args)
    solver = SpectrumSolver(spec, QuadGrid(settings.qnodes), _options(args, settings))
    out = Path(args.out)
    metadata = _metadata(settings)

    components: List[SpectralComponent] = []
    runtimes: Dict[str, float] = {}
    for level in range(spec.N + 1):
        start = time.perf_counter()
        if level == 0:
            component = solver.sigma0()
        elif level < spec.N:
            component = solver.sigma_j(level)
        else:
            component = solver.sigma_N(inner=components)
        runtimes[str(level)] = time.perf_counter() - start
        components.append(component)
        write_csv(component.to_frame(), out / f"sigma_{level}.csv", metadata)
        _print_component(component, runtimes[str(level)])

    if getattr(args, "model", None) == "graphene" and spec.N >= 2:
        guided = compare_guided(components[1].to_frame(), args.v1)
        write_csv(guided, out / "guided.csv", metadata)

    summary = {
        "spec": spec.name,
        "N": spec.N,
        "M": spec.M,
        "self_adjoint": solver.self_adjoint,
        "components": [component.to_dict() for component in components],
        "eigenvalues": components[-1].eigenvalues(),
        "disjointness_margin": {str(c.level): c.margin for c in components[1:]},
        "discarded_cells": solver.discarded_cells,
        "runtimes": runtimes,
        "settings": {**metadata, "delta": settings.delta, "root_tol": settings.root_tol,
                     "threads": settings.threads},
    }
    write_json(summary, out / "summary.json")
    print(f"✅ 结果已写入 {out}")
    return EXIT_OK


def cmd_branches(args) -> int:
    """单层分支表"""
    settings = _settings(args)
    spec = _load_operator(args)
    level = args.level
    if not 0 <= level <= spec.N:
        raise ValueError(f"层号必须在 [0, {spec.N}] 内: {level}")
    solver = SpectrumSolver(spec, QuadGrid(settings.qnodes), _options(args, settings))
    start = time.perf_counter()
    if level == 0:
        component = solver.sigma0()
    elif level < spec.N:
        component = solver.sigma_j(level)
    else:
        component = solver.sigma_N()
    _print_component(component, time.perf_counter() - start)
    write_csv(component.to_frame(), args.out, _metadata(settings))
    print(f"✅ 分支表已写入 {args.out}")
    return EXIT_OK


# ==================== resolvent ====================
def _parse_source(args, spec: OperatorSpec):
    if args.site:
        if len(args.site) != spec.N + 1:
            raise ValueError(f"--site 需要 N+1={spec.N + 1} 个整数 (胞坐标 n_1..n_N 与节点 p)")
        return LatticeSite(cell=args.site[:-1], node=args.site[-1])
    if args.source:
        return args.source
    raise ValueError("需要 --source 或 --site")


def cmd_resolvent(args) -> int:
    """u = ℛ(λ)f 写成 GridFunction JSON，并报告残差"""
    settings = _settings(args)
    spec = _load_operator(args)
    lam = complex(args.lam[0], args.lam[1])
    grid = QuadGrid(settings.qnodes)
    report = source_response(spec, lam, _parse_source(args, spec), grid,
                             form=args.form, delta=settings.delta)
    write_json(report.to_dict(), args.out)
    if args.samples:
        write_csv(report.samples, args.samples, _metadata(settings))
    marker = "✅" if report.residual < 1e-8 else "⚠️ "
    print(f"{marker} λ={lam}: ‖u‖={report.norm:.10g}, 残差={report.residual:.3e}")
    return EXIT_OK


# ==================== inverse ====================
def cmd_inverse(args) -> int:
    """分支文件 → 表格化 OperatorSpec JSON 与回代报告"""
    settings = _settings(args)
    branches = load_branches(args.branches_file)
    grid = QuadGrid(settings.qnodes)
    synthesizer = OperatorSynthesizer(branches, grid, threads=settings.threads)
    synthesis = synthesizer.synthesize(validate=True)
    print(f"✅ 分支条件通过, 最小距离 {synthesis.validation.min_distance}")
    save_spec(synthesis.spec, args.out)
    for j, error in synthesis.candidate_errors.items():
        print(f"   A_{j} 与闭式候选最大误差 {error:.3e}")
    if synthesis.bracket_failures:
        print(f"⚠️  {len(synthesis.bracket_failures)} 个节点的单调性括号检查未通过")

    report: Dict[str, Any] = {"synthesis": synthesis.to_dict()}
    if spec_constant(synthesis.spec) is not None:
        report["A_N"] = spec_constant(synthesis.spec)
        print(f"   A_{branches.N} = {report['A_N']:.10g}")
    if not args.no_roundtrip:
        options = SpectrumOptions.from_settings(settings, scan_points=args.lscan or ROUNDTRIP_SCAN_POINTS)
        roundtrip = verify_roundtrip(branches, synthesis.spec, grid, options)
        report["roundtrip"] = roundtrip.to_dict()
        marker = "✅" if roundtrip.passed else "⚠️ "
        print(f"{marker} 回代偏差 {roundtrip.max_deviation}")
    write_json(report, Path(args.out).with_suffix(".report.json"))
    print(f"✅ 算子规格已写入 {args.out}")
    return EXIT_OK


def spec_constant(spec: OperatorSpec) -> Optional[float]:
    """标量算子顶层常数 A_N 的实部"""
    if spec.M != 1:
        return None
    value = spec.evaluate(spec.N, np.full((1, spec.N), 0.5))[0, 0, 0]
    return float(value.real)


# ==================== validate ====================
def cmd_validate(args) -> int:
    report = SpecValidator.from_path(args.spec_file).validate()
    for warning in report.warnings:
        print(f"⚠️  {warning}")
    if args.json:
        print(json_helper.dumps(report.to_dict(), indent=2))
    if not report.passed:
        print(f"❌ 规格校验失败: {report.path}")
        for error in report.errors:
            print(f"   - {error}")
        return EXIT_VALIDATION
    kind = "自伴" if report.self_adjoint else "非自伴"
    print(f"✅ 规格有效: {report.path} ({kind})")
    return EXIT_OK


# ==================== graphene / oracle ====================
def cmd_graphene(args) -> int:
    """色散面、投影曲线、导波曲线与 D_loc 扫描"""
    settings = _settings(args)
    out = Path(args.out)
    metadata = _metadata(settings)
    grid = QuadGrid(settings.qnodes)

    write_csv(dispersion_surface(args.points), out / "dispersion.csv", metadata)
    write_csv(projection_curves(settings.kgrid + 1), out / "projection.csv", metadata)
    if args.v1 != 0.0:
        solver = build_graphene(args.v1, 0.0).solver(_options(args, settings), grid)
        guided = compare_guided(solver.sigma_j(1).to_frame(), args.v1)
        write_csv(guided, out / "guided.csv", metadata)
        print(f"✅ 导波曲线: {len(guided)} 个根, 最大闭式偏差 {guided['deviation'].max() if len(guided) else 0.0:.3e}")
    lo, hi = args.lrange if args.lrange else default_window(build_graphene(args.v1, args.v2).spec)
    scan = d_loc_scan(args.v1, args.v2, np.linspace(lo, hi, args.lcount), grid, delta=settings.delta)
    write_csv(scan, out / "d_loc.csv", metadata)
    print(f"✅ 石墨烯数据已写入 {out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    """环面直接对角化的升序特征值"""
    if args.spec_file:
        spec = load_spec(args.spec_file)
    else:
        spec = build_graphene(args.v1, args.v2).spec
    start = time.perf_counter()
    lattice = torus_from_spec(spec, args.P)
    eigenvalues = lattice.eigenvalues()
    frame = pd.DataFrame({"index": np.arange(len(eigenvalues)), "lambda": eigenvalues})
    write_csv(frame, args.out, {"version": VERSION, "P": args.P})
    print(f"✅ P={args.P}: {lattice.sites} 个格点, 用时 {time.perf_counter() - start:.2f}s")
    return EXIT_OK


# ==================== 参数解析 ====================
def _add_numeric_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--qnodes", type=int, help="每轴Gauss节点数 Q (默认64)")
    parser.add_argument("--kgrid", type=int, help="每轴k网格点数 (默认128)")
    parser.add_argument("--lwindow", type=float, nargs=2, metavar=("A", "B"), help="λ扫描窗口")
    parser.add_argument("--lscan", type=int, help="λ扫描点数 (默认2000)")
    parser.add_argument("--delta", type=float, help="投影排除的边界 δ (默认1e-6)")
    parser.add_argument("--root-tol", type=float, help="根的残差容限 (默认1e-9)")
    parser.add_argument("--threads", type=int, help="并行线程数，覆盖 LATTICE_CF_THREADS")
    parser.add_argument("--use-gbar", action="store_true", help="扫描 det Ḡ_j 而不是 det G_j")


def _add_model_flags(parser: argparse.ArgumentParser):
    parser.add_argument("spec_file", nargs="?", help="算子规格JSON")
    parser.add_argument("--model", choices=["graphene"], help="内置模型")
    parser.add_argument("--v1", type=float, default=0.0, help="线缺陷势 V₁")
    parser.add_argument("--v2", type=float, default=0.0, help="点缺陷势 V₂")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lattice-cf", description="带缺陷周期格算子的连分式谱计算")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="日志级别")
    parser.add_argument("--version", action="version", version=f"lattice-cf {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="计算全部谱分量")
    _add_model_flags(p)
    _add_numeric_flags(p)
    p.add_argument("--out", required=True, help="输出目录")
    p.set_defaults(handler=cmd_spectrum, out_is_dir=True)

    p = sub.add_parser("branches", help="单层色散分支表")
    _add_model_flags(p)
    _add_numeric_flags(p)
    p.add_argument("--level", type=int, required=True, help="层号 j")
    p.add_argument("--out", required=True, help="输出CSV")
    p.set_defaults(handler=cmd_branches)

    p = sub.add_parser("resolvent", help="计算 ℛ(λ)f")
    _add_model_flags(p)
    p.add_argument("--qnodes", type=int, help="每轴Gauss节点数 Q (默认64)")
    p.add_argument("--lambda", dest="lam", type=float, nargs=2, required=True, metavar=("RE", "IM"))
    p.add_argument("--source", nargs="+", help="每个分量一个表达式")
    p.add_argument("--site", type=int, nargs="+", help="格点源: n_1 ... n_N p")
    p.add_argument("--form", choices=FORMS, default="standard", help="预解式形式")
    p.add_argument("--delta", type=float, help="λ与内层投影的最小距离 δ (默认1e-6)")
    p.add_argument("--samples", help="逐点采样CSV")
    p.add_argument("--out", required=True, help="输出JSON")
    p.set_defaults(handler=cmd_resolvent)

    p = sub.add_parser("inverse", help="由色散分支构造算子")
    p.add_argument("branches_file", help="分支规格JSON")
    p.add_argument("--qnodes", type=int, help="每轴Gauss节点数 Q (默认64)")
    p.add_argument("--lscan", type=int, help="回代λ扫描点数 (默认4000)")
    p.add_argument("--threads", type=int, help="并行线程数")
    p.add_argument("--no-roundtrip", action="store_true", help="跳过正向回代")
    p.add_argument("--out", required=True, help="输出的算子规格JSON")
    p.set_defaults(handler=cmd_inverse)

    p = sub.add_parser("validate", help="校验算子规格文件")
    p.add_argument("spec_file", help="算子规格JSON")
    p.add_argument("--json", action="store_true", help="打印JSON报告")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("graphene", help="石墨烯算例数据")
    p.add_argument("--v1", type=float, default=0.0, help="线缺陷势 V₁")
    p.add_argument("--v2", type=float, default=0.0, help="点缺陷势 V₂")
    p.add_argument("--points", type=int, default=64, help="色散面每轴点数")
    p.add_argument("--lrange", type=float, nargs=2, metavar=("A", "B"), help="D_loc 扫描区间")
    p.add_argument("--lcount", type=int, default=801, help="D_loc 扫描点数")
    _add_numeric_flags(p)
    p.add_argument("--out", required=True, help="输出目录")
    p.set_defaults(handler=cmd_graphene, out_is_dir=True)

    p = sub.add_parser("oracle", help="环面直接对角化")
    p.add_argument("spec_file", nargs="?", help="算子规格JSON (缺省为石墨烯)")
    p.add_argument("--v1", type=float, default=0.0, help="线缺陷势 V₁")
    p.add_argument("--v2", type=float, default=0.0, help="点缺陷势 V₂")
    p.add_argument("-P", type=int, default=16, help="每个方向的胞数 (≥4)")
    p.add_argument("--out", required=True, help="输出CSV")
    p.set_defaults(handler=cmd_oracle)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    return run_command(args.handler, args)


if __name__ == "__main__":
    sys.exit(main())
