"""
表达式语言模块
定义系数矩阵元素的复值函数 f(k1, ..., kN)
"""

from .expression import MatrixExpr, depends_on, eval_expr, evaluate_array
from .nodes import (
    BinaryOp,
    Call,
    Constant,
    Negate,
    Number,
    Variable,
    to_source,
    variables_in,
)
from .parser import parse_expr

__all__ = [
    'MatrixExpr',
    'parse_expr',
    'eval_expr',
    'evaluate_array',
    'depends_on',
    'to_source',
    'variables_in',
    'Number',
    'Constant',
    'Variable',
    'Negate',
    'BinaryOp',
    'Call',
]
