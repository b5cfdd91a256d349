"""
异常定义模块
所有库异常都继承自ValueError，携带结构化上下文，便于CLI映射退出码
"""

from typing import Any, Dict, List, Optional, Tuple


class ExprSyntaxError(ValueError):
    """表达式语法错误（含未知标识符、变量越界、非整数指数）"""

    def __init__(self, message: str, position: int, text: Optional[str] = None):
        self.position = position
        self.text = text
        super().__init__(f"表达式语法错误 (位置 {position}): {message}")


class ExprEvaluationError(ValueError):
    """表达式求值错误：除零、ln在零或非正实数处求值"""

    def __init__(self, message: str, span: Tuple[int, int]):
        self.span = span
        super().__init__(f"表达式求值错误 (区间 {span[0]}-{span[1]}): {message}")


class SpectralProximityError(ValueError):
    """连分式内层矩阵数值奇异，λ过于接近内层谱分量"""

    def __init__(self, level: int, rcond: float):
        self.level = level
        self.rcond = rcond
        super().__init__(
            f"谱邻近错误: 第 {level} 层矩阵数值奇异 (rcond={rcond:.3e})"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"error": "spectral_proximity", "level": self.level, "rcond": self.rcond}


class QuadratureMarginError(ValueError):
    """λ与被排除的投影集距离小于边界δ"""

    def __init__(self, level: int, distance: float, delta: float):
        self.level = level
        self.distance = distance
        self.delta = delta
        super().__init__(
            f"积分边界错误: 第 {level} 层 λ 距内层投影 {distance:.3e} < δ={delta:.1e}"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"error": "quadrature_margin", "level": self.level,
                "distance": self.distance, "delta": self.delta}


class InconsistentSpectralDataError(ValueError):
    """重构出的系数随λ变化，谱数据不一致"""

    def __init__(self, level: int, deviation: float):
        self.level = level
        self.deviation = deviation
        super().__init__(
            f"谱数据不一致: 第 {level} 层重构系数依赖于λ (偏差 {deviation:.3e})"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"error": "inconsistent_spectral_data", "level": self.level,
                "deviation": self.deviation}


class BranchConditionError(ValueError):
    """色散分支不满足不相交条件"""

    def __init__(self, report: Any):
        self.report = report
        offending = getattr(report, "offending", [])
        super().__init__(f"分支条件不满足: 共 {len(offending)} 个违规k点")


class SpecValidationError(ValueError):
    """算子规格文件校验失败"""

    def __init__(self, path: str, errors: List[str]):
        self.path = path
        self.errors = errors
        detail = "; ".join(errors)
        super().__init__(f"规格校验失败 [{path}]: {detail}")

    def to_dict(self) -> Dict[str, Any]:
        return {"error": "spec_validation", "path": self.path, "errors": self.errors}


class IntegrandError(ValueError):
    """被积函数在某个积分节点处求值失败"""

    def __init__(self, node: Tuple[float, ...], cause: Exception):
        self.node = node
        self.cause = cause
        super().__init__(f"被积函数在节点 {node} 处求值失败: {cause}")
