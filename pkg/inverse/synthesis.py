"""
由色散分支合成标量算子并做正向回代验证
A₀ = λ₀，A_j(k_j) = −⟨F_{j−1}⁻¹(λ_j(k_j), k_j, ·)⟩_j⁻¹
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from core.engine import ContinuedFractionEngine
from core.errors import BranchConditionError
from core.operator import Coefficient, ExprCoefficient, OperatorSpec, TabulatedCoefficient
from core.quadrature import QuadGrid
from expr import evaluate_array, parse_expr
from spectrum import SpectrumOptions, SpectrumSolver
from utils.parallel import parallel_map

from .branches import BranchReport, BranchSpec, validate_branches


BRACKET_EPSILON = 1e-5
ROUNDTRIP_TOLERANCE = 1e-6


def node_tails(grid: QuadGrid, dims: int) -> np.ndarray:
    """尾部坐标的Gauss节点张量网格，列顺序 (k_{j+1}, ..., k_N)，行按C序"""
    if dims == 0:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*([grid.nodes] * dims), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, dims)


@dataclass
class SynthesisReport:
    """合成结果：算子、各层表格、单调性括号检查与闭式候选比对"""
    spec: OperatorSpec
    tables: Dict[int, np.ndarray]
    bracket_failures: List[Dict[str, Any]] = field(default_factory=list)
    candidate_errors: Dict[int, float] = field(default_factory=dict)
    validation: Optional[BranchReport] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "levels": self.spec.N + 1,
            "bracket_failures": self.bracket_failures,
            "candidate_errors": {str(j): e for j, e in self.candidate_errors.items()},
            "validation": self.validation.to_dict() if self.validation else None,
        }


@dataclass
class RoundtripReport:
    """正向回代：每层重算分支与输入分支的最大偏差"""
    max_deviation: Dict[int, float]
    tolerance: float
    missing: Dict[int, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(d < self.tolerance for d in self.max_deviation.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "max_deviation": {str(j): d for j, d in self.max_deviation.items()},
            "missing": {str(j): m for j, m in self.missing.items()},
        }


class OperatorSynthesizer:
    """
    标量逆谱构造器

    逐层计算：第 j 层只需要已经确定的 A_0..A_{j−1}，
    尚未确定的层用零系数占位。
    """

    def __init__(self, branches: BranchSpec, grid: Optional[QuadGrid] = None,
                 threads: int = 1, epsilon: float = BRACKET_EPSILON):
        self.branches = branches
        self.grid = grid or QuadGrid()
        self.threads = threads
        self.epsilon = epsilon
        self.logger = logging.getLogger(f"Inverse.{branches.name}")

    def _placeholder(self, level: int) -> Coefficient:
        return ExprCoefficient(level, [[parse_expr("0", self.branches.N)]])

    def _spec(self, coefficients: List[Coefficient]) -> OperatorSpec:
        N = self.branches.N
        full = coefficients + [self._placeholder(j) for j in range(len(coefficients), N + 1)]
        return OperatorSpec(N, 1, full, name=self.branches.name, self_adjoint_hint=True)

    def _level_values(self, engine: ContinuedFractionEngine, j: int,
                      tails: np.ndarray, lambdas: np.ndarray) -> List[Dict[str, Any]]:
        """逐个尾部节点：A_j 与 λ_j±ε 处 F_j 的符号"""
        eps = self.epsilon

        def work(index: int) -> Dict[str, Any]:
            lam = float(lambdas[index])
            probes = np.array([lam - eps, lam, lam + eps])
            # 分支已按 δ 校验；探测点 λ_j±ε 不再量投影距离
            state = engine.evaluate(j, probes, tails[index], with_kernels=False, strict=True,
                                    check_margin=False)
            mean = state.mean_inv[j][:, 0, 0, 0]
            value = -1.0 / mean[1]
            below = value + 1.0 / mean[0]
            above = value + 1.0 / mean[2]
            return {"value": value, "below": below.real, "above": above.real}

        return parallel_map(work, range(len(tails)), self.threads)

    def synthesize(self, validate: bool = True) -> SynthesisReport:
        """
        Raises:
            BranchConditionError: 分支不满足不相交条件
            SpectralProximityError: 某节点上分支离内层投影过近
        """
        b = self.branches
        N = b.N
        validation = None
        if validate:
            validation = validate_branches(b)
            if not validation.passed:
                self.logger.error(f"分支条件不满足，共 {len(validation.offending)} 个违规点")
                raise BranchConditionError(validation)

        coefficients: List[Coefficient] = [ExprCoefficient(0, [[b.branches[0]]])]
        tables: Dict[int, np.ndarray] = {}
        failures: List[Dict[str, Any]] = []
        for j in range(1, N + 1):
            engine = ContinuedFractionEngine(self._spec(coefficients), self.grid, name=f"{b.name}.level{j}")
            tails = node_tails(self.grid, N - j)
            lambdas = b.evaluate(j, tails)
            results = self._level_values(engine, j, tails, lambdas)
            values = np.array([r["value"] for r in results], dtype=complex)
            for index, r in enumerate(results):
                if not r["below"] * r["above"] < 0:
                    failures.append({"level": j, "k": tails[index].tolist(),
                                     "below": r["below"], "above": r["above"]})
            shape = (self.grid.Q,) * (N - j) + (1, 1)
            table = values.real.reshape(shape) if np.all(np.abs(values.imag) < 1e-12) else values.reshape(shape)
            tables[j] = table
            axes = [self.grid.nodes.copy() for _ in range(N - j)]
            coefficients.append(TabulatedCoefficient(j, N, axes, table))
            self.logger.info(f"A_{j}: {len(tails)} 个节点已制表")

        if failures:
            self.logger.warning(f"{len(failures)} 个节点的单调性括号检查未通过")
        spec = OperatorSpec(N, 1, coefficients, name=b.name, self_adjoint_hint=True)
        report = SynthesisReport(spec, tables, failures, validation=validation)
        report.candidate_errors = self.compare_candidates(tables)
        return report

    def compare_candidates(self, tables: Dict[int, np.ndarray]) -> Dict[int, float]:
        """与用户给出的闭式候选逐节点比较，返回最大绝对误差"""
        errors = {}
        N = self.branches.N
        for j, candidate in self.branches.candidates.items():
            if j not in tables:
                continue
            tails = node_tails(self.grid, N - j)
            head = np.full((len(tails), j), 0.5)
            expected = evaluate_array(candidate, np.concatenate([head, tails], axis=1))
            errors[j] = float(np.max(np.abs(tables[j].reshape(-1) - expected)))
            self.logger.info(f"A_{j} 与闭式候选的最大误差 {errors[j]:.3e}")
        return errors


def synthesize_operator(b: BranchSpec, grid: Optional[QuadGrid] = None, threads: int = 1) -> OperatorSpec:
    return OperatorSynthesizer(b, grid, threads).synthesize().spec


def verify_roundtrip(b: BranchSpec, spec: OperatorSpec, grid: Optional[QuadGrid] = None,
                     options: Optional[SpectrumOptions] = None,
                     tolerance: float = ROUNDTRIP_TOLERANCE) -> RoundtripReport:
    """
    在制表节点上重算各层根，取离输入分支最近的根计算偏差

    λ_0 直接比较 A₀ 的取值；1 ≤ j < N 逐节点扫描 det G_j；λ_N 取 σ_N 中最近的特征值。
    """
    grid = grid or QuadGrid()
    solver = SpectrumSolver(spec, grid, options or SpectrumOptions(scan_points=4000), name=f"{b.name}.roundtrip")
    logger = logging.getLogger(f"Inverse.{b.name}")
    N = b.N
    deviation: Dict[int, float] = {}
    missing: Dict[int, int] = {}

    tails = node_tails(grid, N)
    recomputed = solver.eigen_roots(tails)[:, 0]
    deviation[0] = float(np.max(np.abs(recomputed - b.evaluate(0, tails))))

    for j in range(1, N):
        tails = node_tails(grid, N - j)
        expected = b.evaluate(j, tails)
        worst, absent = 0.0, 0
        for tail, target in zip(tails, expected):
            roots = [float(np.real(r.lam)) for r in solver.scan_point(j, tail)]
            if not roots:
                absent += 1
                worst = float("inf")
                continue
            worst = max(worst, min(abs(root - target) for root in roots))
        deviation[j] = worst
        missing[j] = absent

    eigenvalues = solver.sigma_N_eigenvalues()
    target = float(b.evaluate(N, np.zeros((1, 0)))[0])
    deviation[N] = min((abs(value - target) for value in eigenvalues), default=float("inf"))
    missing[N] = 0 if eigenvalues else 1

    report = RoundtripReport(deviation, tolerance, missing)
    logger.info(f"回代偏差 {deviation}, 通过={report.passed}")
    return report
