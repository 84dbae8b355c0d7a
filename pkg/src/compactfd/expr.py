"""Arithmetic expressions for problem configuration files.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-2^2 == -4``.  Names are the
variables ``x, y, z, t, u``, the constant ``pi`` and the functions ``sin, cos,
tan, exp, log, sqrt, abs``.

Evaluation is vectorised with numpy: any variable may be bound to an array
and the result broadcasts.  Domain violations raise :class:`DomainError`
instead of producing NaN or inf.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, MissingVariableError, UnknownIdentifierError

__all__ = [
    "Num", "Var", "Neg", "BinOp", "Call", "Expr",
    "VARIABLES", "FUNCTIONS", "parse", "evaluate", "to_source", "free_variables", "compile_expr",
]

VARIABLES = frozenset("xyztu")
CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]


def _log(v):
    if np.any(v <= 0):
        raise DomainError("log of a nonpositive value")
    return np.log(v)


def _sqrt(v):
    if np.any(v < 0):
        raise DomainError("sqrt of a negative value")
    return np.sqrt(v)


FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": _log,
    "sqrt": _sqrt,
    "abs": np.abs,
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    tokens = []
    pos = 0
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos),
                                  ("number", "name", "operator"))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


def _byte_offset(src: str, pos: int) -> int:
    return len(src[:pos].encode("utf-8", errors="surrogatepass"))


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def fail(self, msg, expected):
        pos = self.peek()[2]
        raise ExprSyntaxError(msg, _byte_offset(self.src, pos), expected)

    def take_op(self, ops):
        kind, text, _ = self.peek()
        if kind == "op" and text in ops:
            self.k += 1
            return text
        return None

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}", ("+", "-", "*", "/", "^", "end of input"))
        return node

    def expr(self):
        node = self.term()
        while (op := self.take_op("+-")) is not None:
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while (op := self.take_op("*/")) is not None:
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        op = self.take_op("+-")
        if op == "-":
            return Neg(self.unary())
        if op == "+":
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.take_op("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.peek()
        if kind == "num":
            self.k += 1
            return Num(float(text))
        if kind == "name":
            self.k += 1
            if text in FUNCTIONS:
                if not self.take_op("("):
                    self.fail(f"expected '(' after {text}", ("(",))
                arg = self.expr()
                if not self.take_op(")"):
                    self.fail("expected ')'", (")",))
                return Call(text, arg)
            if text in VARIABLES:
                return Var(text)
            if text in CONSTANTS:
                return Num(CONSTANTS[text])
            raise UnknownIdentifierError(text, _byte_offset(self.src, pos))
        if self.take_op("("):
            node = self.expr()
            if not self.take_op(")"):
                self.fail("expected ')'", (")",))
            return node
        self.fail("expected an operand" if kind != "end" else "unexpected end of input",
                  ("number", "name", "("))


def parse(source) -> Expr:
    """Parse text (or UTF-8 bytes) into an expression tree."""
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ExprSyntaxError("invalid UTF-8", exc.start) from None
    if not isinstance(source, str):
        raise TypeError("expression source must be str or bytes")
    return _Parser(source).parse()


def free_variables(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, Call):
        return free_variables(e.arg)
    return free_variables(e.left) | free_variables(e.right)


def _eval(e, env):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise MissingVariableError(e.name) from None
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, Call):
        return FUNCTIONS[e.func](_eval(e.arg, env))
    left = _eval(e.left, env)
    right = _eval(e.right, env)
    if e.op == "+":
        return left + right
    if e.op == "-":
        return left - right
    if e.op == "*":
        return left * right
    if e.op == "/":
        if np.any(np.asarray(right) == 0):
            raise DomainError("division by zero")
        return left / right
    # power
    lv, rv = np.asarray(left, dtype=float), np.asarray(right, dtype=float)
    if np.any((lv == 0) & (rv < 0)):
        raise DomainError("zero raised to a negative power")
    if np.any((lv < 0) & (rv != np.round(rv))):
        raise DomainError("negative base raised to a non-integer power")
    return np.power(lv, rv)


def evaluate(e: Expr, assignment: Mapping[str, object]):
    """Evaluate ``e``; returns a float for scalar inputs, an array otherwise."""
    env = {k: (np.asarray(v, dtype=float) if not np.isscalar(v) else float(v))
           for k, v in assignment.items()}
    with np.errstate(all="ignore"):
        out = _eval(e, env)
    out = np.asarray(out, dtype=float)
    if not np.all(np.isfinite(out)):
        raise DomainError("expression evaluated to a non-finite value")
    return float(out) if out.ndim == 0 else out


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_source(e: Expr) -> str:
    """Print ``e`` as text that parses back to an equal tree."""
    if isinstance(e, Num):
        return repr(e.value) if e.value >= 0 else f"({e.value!r})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    return f"({to_source(e.left)}{e.op}{to_source(e.right)})"


def compile_expr(source):
    """Parse once and return ``f(**vars)`` that evaluates the expression."""
    tree = parse(source) if not isinstance(source, (Num, Var, Neg, BinOp, Call)) else source

    def f(**env):
        return evaluate(tree, env)

    f.tree = tree
    return f
