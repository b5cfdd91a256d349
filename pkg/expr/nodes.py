"""
表达式语法树节点
节点为不可变值；span记录源文本的字节区间，不参与相等比较
"""

from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Tuple


Span = Tuple[int, int]

FUNCTIONS = ("exp", "sin", "cos", "ln", "sqrt", "conj")
CONSTANTS = ("pi", "i")

# 与解析器一致的结合力
PRECEDENCE = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
UNARY_PRECEDENCE = 25
ATOM_PRECEDENCE = 100


class Node:
    """语法树节点基类"""
    span: Span


@dataclass(frozen=True)
class Number(Node):
    """数字字面量"""
    value: float
    text: Optional[str] = None
    span: Span = field(default=(0, 0), compare=False)

    def __post_init__(self):
        if self.text is None:
            object.__setattr__(self, "text", repr(float(self.value)))


@dataclass(frozen=True)
class Constant(Node):
    """常量 pi 或 i"""
    name: str
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Variable(Node):
    """准动量变量 k_index（下标从1开始）"""
    index: int
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Negate(Node):
    """一元负号"""
    operand: Node
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class BinaryOp(Node):
    """二元运算 + - * / ^"""
    op: str
    left: Node
    right: Node
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Call(Node):
    """内置函数调用"""
    func: str
    arg: Node
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Folded(Node):
    """常量折叠后的值，只出现在求值用的树中"""
    value: complex
    span: Span = field(default=(0, 0), compare=False)


def variables_in(node: Node) -> FrozenSet[int]:
    """收集子树引用的变量下标"""
    if isinstance(node, Variable):
        return frozenset({node.index})
    if isinstance(node, Negate):
        return variables_in(node.operand)
    if isinstance(node, BinaryOp):
        return variables_in(node.left) | variables_in(node.right)
    if isinstance(node, Call):
        return variables_in(node.arg)
    return frozenset()


def precedence(node: Node) -> int:
    if isinstance(node, BinaryOp):
        return PRECEDENCE[node.op]
    if isinstance(node, Negate):
        return UNARY_PRECEDENCE
    return ATOM_PRECEDENCE


def to_source(node: Node) -> str:
    """
    把语法树打印为表达式文本，只加必要的括号

    打印结果重新解析后得到相同的语法树。
    """
    if isinstance(node, Number):
        return node.text
    if isinstance(node, Constant):
        return node.name
    if isinstance(node, Variable):
        return f"k{node.index}"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Negate):
        inner = to_source(node.operand)
        if precedence(node.operand) < UNARY_PRECEDENCE:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinaryOp):
        level = PRECEDENCE[node.op]
        left = to_source(node.left)
        right = to_source(node.right)
        left_level = precedence(node.left)
        right_level = precedence(node.right)
        # ^ 右结合，其余左结合
        if left_level < level or (node.op == "^" and left_level == level):
            left = f"({left})"
        if right_level < level or (node.op != "^" and right_level == level):
            right = f"({right})"
        return f"{left}{node.op}{right}"
    if isinstance(node, Folded):
        raise ValueError("折叠节点不能打印为源文本")
    raise ValueError(f"未知节点类型: {type(node).__name__}")
