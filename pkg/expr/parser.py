"""
表达式解析器（Pratt算法）
优先级: ^ > 一元负号 > * / > + -，除 ^ 右结合外均左结合
"""

import re
from typing import List

from core.errors import ExprSyntaxError
from .expression import MatrixExpr
from .evaluator import integer_exponent
from .nodes import (
    CONSTANTS, FUNCTIONS, PRECEDENCE, UNARY_PRECEDENCE,
    BinaryOp, Call, Constant, Negate, Node, Number, Variable,
)
from .tokenizer import END, IDENT, LPAREN, NUMBER, OP, RPAREN, Token, tokenize


_VARIABLE = re.compile(r"k(\d+)$")


class Parser:
    """单个表达式的解析器"""

    def __init__(self, text: str, n_vars: int):
        self.text = text
        self.n_vars = n_vars
        self.tokens: List[Token] = tokenize(text)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        if token.kind != END:
            self.index += 1
        return token

    def expect(self, kind: str, what: str) -> Token:
        token = self.current
        if token.kind != kind:
            self.fail(f"期望 {what}，实际为 {token.text or '结尾'!r}", token.pos)
        return self.advance()

    def fail(self, message: str, position: int):
        raise ExprSyntaxError(message, position, self.text)

    # ==================== Pratt 主循环 ====================
    def parse(self) -> MatrixExpr:
        root = self.expression(0)
        if self.current.kind != END:
            self.fail(f"多余的记号 {self.current.text!r}", self.current.pos)
        return MatrixExpr(root, self.n_vars, self.text)

    def expression(self, rbp: int) -> Node:
        token = self.advance()
        left = self.nud(token)
        while rbp < self.left_binding_power(self.current):
            token = self.advance()
            left = self.led(token, left)
        return left

    def left_binding_power(self, token: Token) -> int:
        if token.kind == OP:
            return PRECEDENCE[token.text]
        return 0

    # ==================== 前缀与中缀 ====================
    def nud(self, token: Token) -> Node:
        if token.kind == NUMBER:
            return Number(float(token.text), token.text, (token.pos, token.end))
        if token.kind == IDENT:
            return self.identifier(token)
        if token.kind == OP and token.text == "-":
            operand = self.expression(UNARY_PRECEDENCE)
            return Negate(operand, (token.pos, operand.span[1]))
        if token.kind == LPAREN:
            inner = self.expression(0)
            self.expect(RPAREN, "')'")
            return inner
        if token.kind == END:
            self.fail("表达式不完整", token.pos)
        self.fail(f"意外的记号 {token.text!r}", token.pos)

    def identifier(self, token: Token) -> Node:
        name = token.text
        if name in CONSTANTS:
            return Constant(name, (token.pos, token.end))
        if name in FUNCTIONS:
            self.expect(LPAREN, f"'(' (函数 {name})")
            arg = self.expression(0)
            closing = self.expect(RPAREN, "')'")
            return Call(name, arg, (token.pos, closing.end))
        match = _VARIABLE.match(name)
        if match:
            index = int(match.group(1))
            if index < 1 or index > self.n_vars:
                self.fail(f"变量下标越界: {name} (n_vars={self.n_vars})", token.pos)
            return Variable(index, (token.pos, token.end))
        self.fail(f"未知标识符 {name!r}", token.pos)

    def led(self, token: Token, left: Node) -> Node:
        if token.text == "^":
            right = self.expression(PRECEDENCE["^"] - 1)
            try:
                integer_exponent(right)
            except ValueError as exc:
                self.fail(f"指数必须是整数常量 ({exc})", right.span[0])
        else:
            right = self.expression(PRECEDENCE[token.text])
        return BinaryOp(token.text, left, right, (left.span[0], right.span[1]))


def parse_expr(text: str, n_vars: int) -> MatrixExpr:
    """
    解析表达式文本

    Args:
        text: 非空表达式文本
        n_vars: 变量个数N（k1..kN）

    Returns:
        MatrixExpr

    Raises:
        ExprSyntaxError: 语法错误、未知标识符、变量越界、非整数指数
    """
    if n_vars < 1:
        raise ValueError(f"变量个数必须 ≥ 1: {n_vars}")
    if not text or not text.strip():
        raise ExprSyntaxError("表达式为空", 0, text)
    return Parser(text, n_vars).parse()
