"""
表达式词法分析
把表达式文本切分为记号序列，位置为字节偏移（语法只允许ASCII字符）
"""

import re
from dataclasses import dataclass
from typing import List

from core.errors import ExprSyntaxError


NUMBER = "NUMBER"
IDENT = "IDENT"
OP = "OP"
LPAREN = "LPAREN"
RPAREN = "RPAREN"
END = "END"

_TOKEN_PATTERN = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^])"
    r"|(?P<lparen>\()"
    r"|(?P<rparen>\))"
)

_GROUP_KIND = {
    "number": NUMBER,
    "ident": IDENT,
    "op": OP,
    "lparen": LPAREN,
    "rparen": RPAREN,
}


@dataclass(frozen=True)
class Token:
    """词法记号"""
    kind: str
    text: str
    pos: int

    @property
    def end(self) -> int:
        return self.pos + len(self.text)


def tokenize(text: str) -> List[Token]:
    """
    切分表达式文本

    Args:
        text: 表达式文本

    Returns:
        记号列表，以END记号结尾

    Raises:
        ExprSyntaxError: 遇到非法字符
    """
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_PATTERN.match(text, pos)
        if match is None:
            raise ExprSyntaxError(f"非法字符 {text[pos]!r}", pos, text)
        group = match.lastgroup
        if group != "ws":
            tokens.append(Token(_GROUP_KIND[group], match.group(), pos))
        pos = match.end()
    tokens.append(Token(END, "", len(text)))
    return tokens
