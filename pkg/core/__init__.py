"""
连分式数值核心模块

子模块:
    linalg      小规模复矩阵内核
    quadrature  Gauss–Legendre 张量积分
    operator    算子规格 OperatorSpec
    engine      连分式引擎 ContinuedFractionEngine / cf_eval / cf_eval_via_ECD
    reconstruct 由 G/F 采样重构系数

operator、engine、reconstruct 依赖 expr 包，需按子模块导入，
例如 ``from core.engine import cf_eval``。
"""

from .errors import (
    BranchConditionError,
    ExprEvaluationError,
    ExprSyntaxError,
    InconsistentSpectralDataError,
    IntegrandError,
    QuadratureMarginError,
    SpecValidationError,
    SpectralProximityError,
)
from .linalg import LUResult, hermitian_defect, lu_det_inv
from .quadrature import QuadGrid, integrate_axis, integrate_box, integrate_with_error

__all__ = [
    'LUResult',
    'lu_det_inv',
    'hermitian_defect',
    'QuadGrid',
    'integrate_axis',
    'integrate_box',
    'integrate_with_error',
    'ExprSyntaxError',
    'ExprEvaluationError',
    'SpectralProximityError',
    'QuadratureMarginError',
    'InconsistentSpectralDataError',
    'BranchConditionError',
    'SpecValidationError',
    'IntegrandError',
]
