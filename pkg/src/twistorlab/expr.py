"""Expression trees over the coordinates x1..x4.

Grammar (recursive descent, one function per rule)::

    expr   := ['-'] term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' unsigned)?
    base   := number | 'x1'..'x4' | func '(' expr ')' | '(' expr ')'
    func   := sin | cos | exp | log | sqrt

The optional leading minus is the only addition to the metric grammar; it
keeps conformal factors such as ``-log(1+x1^2)`` writable.

Nodes are frozen dataclasses, so ``==`` is structural tree equality.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from . import jets
from .errors import ParseError

FUNCTION_NAMES = tuple(jets.FUNCTIONS)


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based; x1 is Var(0)


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: float


Expression = Union[Const, Var, Neg, Call, BinOp, Pow]

ZERO = Const(0.0)
ONE = Const(1.0)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def tokenize(text):
    """Split ``text`` into (kind, value, position) triples."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(kind), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, value, pos = self.tok
        if kind != "op" or value != op:
            found = value or "end of input"
            raise ParseError(f"expected {op!r}, found {found!r}", pos, self.text)
        self.advance()

    def error(self, message):
        raise ParseError(message, self.tok[2], self.text)

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            self.error(f"unexpected token {self.tok[1]!r}")
        return node

    def expr(self):
        if self.tok == ("op", "-", self.tok[2]):
            self.advance()
            node = Neg(self.term())
        else:
            node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            kind, value, _ = self.tok
            if kind != "number":
                self.error("exponent must be an unsigned number")
            self.advance()
            node = Pow(node, float(value))
        return node

    def base(self):
        kind, value, pos = self.tok
        if kind == "number":
            self.advance()
            return Const(float(value))
        if kind == "name":
            self.advance()
            m = re.fullmatch(r"x([1-4])", value)
            if m:
                return Var(int(m.group(1)) - 1)
            if value in FUNCTION_NAMES:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            if re.fullmatch(r"x\d+", value):
                raise ParseError(f"unknown coordinate {value!r}", pos, self.text)
            raise ParseError(f"unknown name {value!r}", pos, self.text)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        found = value or "end of input"
        raise ParseError(f"unexpected {found!r}", pos, self.text)


def parse_expression(text):
    """Parse a single expression string into a tree."""
    return _Parser(text).parse()


def _fmt_number(x):
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def unparse(node):
    """Render a tree as source text that parses back to an equal tree."""
    if isinstance(node, Const):
        if node.value < 0 or not math.isfinite(node.value):
            raise ValueError(f"constant {node.value} has no source form; use Neg")
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Neg):
        return f"(-{unparse(node.arg)})"
    if isinstance(node, Call):
        return f"{node.func}({unparse(node.arg)})"
    if isinstance(node, BinOp):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Pow):
        if node.exponent < 0 or not math.isfinite(node.exponent):
            raise ValueError(f"exponent {node.exponent} has no source form")
        base = unparse(node.base)
        if isinstance(node.base, Pow):
            base = f"({base})"
        return f"{base}^{_fmt_number(node.exponent)}"
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node, x):
    """Evaluate ``node`` at coordinates ``x`` (floats or :class:`~twistorlab.jets.Jet`)."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x[node.index]
    if isinstance(node, BinOp):
        a = evaluate(node.left, x)
        b = evaluate(node.right, x)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        return a / b
    if isinstance(node, Pow):
        p = node.exponent
        return evaluate(node.base, x) ** (int(p) if p.is_integer() else p)
    if isinstance(node, Call):
        return jets.FUNCTIONS[node.func](evaluate(node.arg, x))
    if isinstance(node, Neg):
        return -evaluate(node.arg, x)
    raise TypeError(f"not an expression node: {node!r}")


def variables(node):
    """Set of 0-based coordinate indices referenced by ``node``."""
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Const):
        return set()
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, (Neg, Call)):
        return variables(node.arg)
    if isinstance(node, Pow):
        return variables(node.base)
    raise TypeError(f"not an expression node: {node!r}")


def substitute(node, mapping):
    """Replace ``Var(i)`` by ``mapping[i]`` wherever ``i`` is in ``mapping``."""
    if isinstance(node, Var):
        return mapping.get(node.index, node)
    if isinstance(node, Const):
        return node
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, mapping))
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, mapping))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, mapping), node.exponent)
    raise TypeError(f"not an expression node: {node!r}")


def is_zero(node):
    return isinstance(node, Const) and node.value == 0.0
