"""Expression language for velocity-field components.

Grammar::

    field    := expr sep expr sep expr          sep is "," or ";"
    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := "-" unary | power
    power    := base ("^" exponent)?
    exponent := "-" exponent | base             must not contain x, y or z
    base     := number | "x" | "y" | "z" | "pi" | func "(" expr ")" | "(" expr ")"

Unary minus binds looser than ``^`` so that ``-x^2`` means ``-(x^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from ..errors import DomainError, ParseError
from .jets import UNARY, Jet, apply_unary, power

__all__ = [
    "Node",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "parse_expression",
    "parse_components",
    "evaluate",
    "to_text",
]

VARIABLES = ("x", "y", "z")
FUNCTIONS = tuple(UNARY)


class Node:
    """Base class of the expression tree."""

    def variables(self) -> frozenset[str]:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Node):
    value: float
    label: str | None = None

    def variables(self):
        return frozenset()


@dataclass(frozen=True)
class Var(Node):
    name: str

    def variables(self):
        return frozenset({self.name})


@dataclass(frozen=True)
class Neg(Node):
    arg: Node

    def variables(self):
        return self.arg.variables()


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def variables(self):
        return self.left.variables() | self.right.variables()


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: float

    def variables(self):
        return self.base.variables()


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node

    def variables(self):
        return self.arg.variables()


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    # end of input is reported where the meaningful text stops
    tokens.append(_Token("end", "", len(source.rstrip())))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.tok
        return ParseError(message, tok.pos, self.source)

    def advance(self) -> _Token:
        tok = self.tok
        self.i += 1
        return tok

    def accept(self, *ops: str) -> _Token | None:
        if self.tok.kind == "op" and self.tok.text in ops:
            return self.advance()
        return None

    def expect(self, op: str) -> _Token:
        tok = self.accept(op)
        if tok is None:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {op!r}, found {found!r}")
        return tok

    def expr(self) -> Node:
        node = self.term()
        while (tok := self.accept("+", "-")) is not None:
            node = BinOp(tok.text, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while (tok := self.accept("*", "/")) is not None:
            node = BinOp(tok.text, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.base()
        caret = self.accept("^")
        if caret is None:
            return base
        start = self.tok
        exponent = self.exponent()
        if exponent.variables():
            raise self.error("exponent must be a constant expression", start)
        try:
            value = evaluate(exponent, {})
        except DomainError as exc:
            raise self.error(f"invalid exponent: {exc}", start) from None
        return Pow(base, value)

    def exponent(self) -> Node:
        if self.accept("-"):
            return Neg(self.exponent())
        return self.base()

    def base(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text in VARIABLES:
                return Var(tok.text)
            if tok.text == "pi":
                return Const(math.pi, "pi")
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            raise self.error(f"unknown identifier {tok.text!r}", tok)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "end":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected token {tok.text!r}")

    def finish(self):
        if self.tok.kind != "end":
            raise self.error(f"unexpected token {self.tok.text!r}")


def parse_expression(source: str) -> Node:
    """Parse a single scalar expression."""
    p = _Parser(source)
    node = p.expr()
    p.finish()
    return node


def parse_components(source: str) -> tuple[Node, Node, Node]:
    """Parse three separator-delimited component expressions.

    >>> [to_text(n) for n in parse_components("-x, y; 0")]
    ['(-x)', 'y', '0.0']
    """
    p = _Parser(source)
    nodes = [p.expr()]
    for _ in range(2):
        if p.accept(",", ";") is None:
            found = p.tok.text or "end of input"
            raise p.error(f"expected ',' or ';' between components, found {found!r}")
        nodes.append(p.expr())
    p.finish()
    return tuple(nodes)


def to_text(node: Node) -> str:
    """Fully parenthesised source text that re-parses to the same values."""
    if isinstance(node, Const):
        return node.label or repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Pow):
        return f"({to_text(node.base)}^{node.exponent!r})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def _finite(value) -> bool:
    if isinstance(value, Jet):
        return value.is_finite()
    return math.isfinite(value)


def evaluate(node: Node, env: dict):
    """Evaluate ``node`` with variables bound in ``env``.

    Values in ``env`` may be floats or :class:`Jet` instances; the result has
    the same kind.  Raises :class:`DomainError` naming the first
    subexpression that produced a non-finite value.
    """
    try:
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Var):
            return env[node.name]
        if isinstance(node, Neg):
            out = -evaluate(node.arg, env)
        elif isinstance(node, BinOp):
            a = evaluate(node.left, env)
            b = evaluate(node.right, env)
            if node.op == "+":
                out = a + b
            elif node.op == "-":
                out = a - b
            elif node.op == "*":
                out = a * b
            else:
                if not isinstance(b, Jet) and b == 0.0:
                    raise ZeroDivisionError("division by zero")
                out = a / b
        elif isinstance(node, Pow):
            out = power(evaluate(node.base, env), node.exponent)
        elif isinstance(node, Call):
            out = apply_unary(node.func, evaluate(node.arg, env))
        else:
            raise TypeError(f"not an expression node: {node!r}")
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise DomainError(f"domain violation ({exc})", to_text(node)) from None
    if not _finite(out):
        raise DomainError("non-finite value", to_text(node))
    return out
