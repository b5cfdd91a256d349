"""
表达式求值
对k点数组做向量化求值；奇异点（除零、ln非正实数）抛出异常，不产生静默NaN
"""

import numpy as np
from typing import Union

from core.errors import ExprEvaluationError
from .nodes import (
    BinaryOp, Call, Constant, Folded, Negate, Node, Number, Variable, variables_in,
)


Value = Union[complex, np.ndarray]

_CONSTANTS = {"pi": complex(np.pi), "i": 1j}


def evaluate_node(node: Node, coords: np.ndarray) -> Value:
    """
    在一组k点上对子树求值

    Args:
        node: 语法树节点
        coords: 形状 (..., n_vars) 的实数组

    Returns:
        复数标量或形状为 coords.shape[:-1] 的复数组（由广播决定）
    """
    if isinstance(node, Folded):
        return node.value
    if isinstance(node, Number):
        return complex(node.value)
    if isinstance(node, Constant):
        return _CONSTANTS[node.name]
    if isinstance(node, Variable):
        return coords[..., node.index - 1].astype(complex)
    if isinstance(node, Negate):
        return -evaluate_node(node.operand, coords)
    if isinstance(node, Call):
        return _call(node, evaluate_node(node.arg, coords))
    if isinstance(node, BinaryOp):
        left = evaluate_node(node.left, coords)
        if node.op == "^":
            return _power(node, left, integer_exponent(node.right))
        right = evaluate_node(node.right, coords)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if np.any(right == 0):
            raise ExprEvaluationError("除数为零", node.span)
        return left / right
    raise ValueError(f"未知节点类型: {type(node).__name__}")


def _call(node: Call, arg: Value) -> Value:
    if node.func == "exp":
        return np.exp(arg)
    if node.func == "sin":
        return np.sin(arg)
    if node.func == "cos":
        return np.cos(arg)
    if node.func == "sqrt":
        return np.sqrt(arg)
    if node.func == "conj":
        return np.conj(arg)
    if node.func == "ln":
        values = np.asarray(arg)
        if np.any((values.imag == 0) & (values.real <= 0)):
            raise ExprEvaluationError("ln 的自变量为零或非正实数", node.span)
        return np.log(arg)
    raise ValueError(f"未知函数: {node.func}")


def _power(node: BinaryOp, base: Value, exponent: int) -> Value:
    if exponent >= 0:
        return base ** exponent
    if np.any(base == 0):
        raise ExprEvaluationError("零的负整数次幂", node.span)
    return 1.0 / base ** (-exponent)


def integer_exponent(node: Node) -> int:
    """把常量指数子树求值为整数，不是整数常量时抛出ValueError"""
    if variables_in(node):
        raise ValueError("指数依赖于变量")
    value = complex(evaluate_node(node, np.zeros((0,))))
    if value.imag != 0 or value.real != round(value.real):
        raise ValueError(f"指数不是整数: {value}")
    return int(round(value.real))


def fold_constants(node: Node) -> Node:
    """
    常量折叠：不含变量的子树替换为求值结果

    折叠时求值失败的子树保持原样，错误留到求值时按原区间报告。
    """
    if isinstance(node, (Number, Constant, Variable, Folded)):
        return node
    if not variables_in(node):
        try:
            with np.errstate(all="ignore"):
                value = complex(evaluate_node(node, np.zeros((0,))))
        except ExprEvaluationError:
            value = None
        if value is not None and np.isfinite(value):
            return Folded(value, node.span)
    if isinstance(node, Negate):
        return Negate(fold_constants(node.operand), node.span)
    if isinstance(node, Call):
        return Call(node.func, fold_constants(node.arg), node.span)
    if isinstance(node, BinaryOp):
        if node.op == "^":
            # 指数在解析时已校验为整数常量
            return BinaryOp(node.op, fold_constants(node.left), node.right, node.span)
        return BinaryOp(node.op, fold_constants(node.left), fold_constants(node.right), node.span)
    return node
