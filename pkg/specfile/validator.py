"""
规格校验模块
依赖规则、Hermite探测与表达式健康检查
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from core.errors import SpecValidationError
from core.operator import HERMITIAN_TOLERANCE, ExprCoefficient, OperatorSpec

from .schema import SpecFile


@dataclass
class ValidationReport:
    """校验结果：errors 导致失败，warnings 仅提示"""
    path: str
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    hermitian_defects: List[float] = field(default_factory=list)
    self_adjoint: bool = False

    @property
    def passed(self) -> bool:
        return not self.errors

    def to_dict(self) -> Dict[str, Any]:
        return {
            "path": self.path,
            "passed": self.passed,
            "errors": self.errors,
            "warnings": self.warnings,
            "hermitian_defects": self.hermitian_defects,
            "self_adjoint": self.self_adjoint,
        }


class SpecValidator:
    """算子规格校验器"""

    def __init__(self, spec_file: SpecFile):
        self.spec_file = spec_file

    @classmethod
    def from_path(cls, path: str) -> "SpecValidator":
        return cls(SpecFile.load(path))

    @staticmethod
    def symbolic_dependence(spec: OperatorSpec) -> List[str]:
        """表达式系数的变量集合检查：A_j 中不得出现 k_1..k_j"""
        errors = []
        for j, coefficient in enumerate(spec.A):
            if not isinstance(coefficient, ExprCoefficient):
                continue
            illegal = sorted(m for m in coefficient.variables() if m <= j)
            if illegal:
                names = ", ".join(f"k{m}" for m in illegal)
                errors.append(f"A_{j} 依赖了 {names}，只能依赖 k_{j + 1},...,k_N")
        return errors

    @staticmethod
    def expression_health(spec: OperatorSpec) -> List[str]:
        """在探测点上求值，报告除零、ln奇异等问题"""
        errors = []
        points = spec.probe_points()
        for j in range(spec.N + 1):
            try:
                values = spec.evaluate(j, points)
            except ValueError as exc:
                errors.append(f"A_{j} 在探测点上求值失败: {exc}")
                continue
            if not np.all(np.isfinite(values)):
                errors.append(f"A_{j} 在探测点上出现非有限值")
        return errors

    def validate(self) -> ValidationReport:
        report = ValidationReport(self.spec_file.path)
        try:
            spec = self.spec_file.to_operator()
        except SpecValidationError as exc:
            report.errors.extend(exc.errors)
            return report

        report.errors.extend(self.symbolic_dependence(spec))
        health = self.expression_health(spec)
        report.errors.extend(health)
        if health:
            return report
        if not report.errors:
            report.errors.extend(spec.check_dependence())

        report.hermitian_defects = spec.hermitian_defects()
        report.self_adjoint = all(d < HERMITIAN_TOLERANCE for d in report.hermitian_defects)
        hint = self.spec_file.self_adjoint_hint
        if hint is not None and hint != report.self_adjoint:
            report.warnings.append(
                f"self_adjoint_hint={hint} 与探测结果不一致 "
                f"(最大Hermite偏差 {max(report.hermitian_defects):.3e})"
            )
        if all(np.allclose(spec.evaluate(j, spec.probe_points()), 0.0) for j in range(1, spec.N + 1)):
            report.warnings.append("A_1..A_N 全为零，算子没有缺陷")
        return report

    def is_valid(self) -> Tuple[bool, List[str]]:
        report = self.validate()
        return report.passed, report.errors
