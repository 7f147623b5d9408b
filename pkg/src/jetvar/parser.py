"""Recursive-descent parser for the expression text grammar.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' ['-'] atom)?
    atom   := number | coord | func '(' expr ')' | '(' expr ')'
    coord  := 'u' '[' int (';' int (',' int)*)? ']'  |  't' '[' int ']'

``t[i]`` names the i-th curve parameter and is stored as the base coordinate
``u[i]`` of parameter space (only meaningful inside curve definitions).
"""
from __future__ import annotations

import re
from fractions import Fraction

from .errors import OrderOverflowError, ParseError
from .symexpr import FUNCTIONS, MAX_ORDER, Coord, Dimensions, Expr, apply_function

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()\[\];,])"
)


class _Tok:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind, self.text, self.pos = kind, text, pos


def _line_col(src: str, pos: int) -> tuple[int, int]:
    line = src.count("\n", 0, pos) + 1
    col = pos - (src.rfind("\n", 0, pos) + 1) + 1
    return line, col


class _Parser:
    def __init__(self, src: str, dims: Dimensions | None, allow_t: bool, line0: int, col0: int):
        self.src = src
        self.dims = dims
        self.allow_t = allow_t
        self.line0 = line0
        self.col0 = col0
        self.toks: list[_Tok] = []
        pos = 0
        while pos < len(src):
            m = _TOKEN.match(src, pos)
            if not m:
                self.fail(f"unexpected character {src[pos]!r}", pos)
            if m.lastgroup != "ws":
                text = m.group()
                self.toks.append(_Tok(m.lastgroup, "^" if text == "**" else text, pos))
            pos = m.end()
        self.toks.append(_Tok("end", "", len(src)))
        self.i = 0

    def fail(self, msg, pos):
        line, col = _line_col(self.src, pos)
        if line == 1:
            col += self.col0 - 1
        raise ParseError(msg, line + self.line0 - 1, col)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self, text=None, kind=None) -> _Tok:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(t.text) if t.text else "end of input"
            self.fail(f"expected {want}, got {got}", t.pos)
        self.i += 1
        return t

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            self.fail("empty expression", 0)
        e = self.expr()
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}", self.tok.pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op.text == "*":
                e = e * rhs
            else:
                try:
                    e = e / rhs
                except ZeroDivisionError:
                    self.fail("division by zero", op.pos)
        return e

    def unary(self) -> Expr:
        if self.tok.text == "-":
            self.take()
            return -self.unary()
        if self.tok.text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        b = self.atom()
        if self.tok.text == "^":
            op = self.take()
            sign = 1
            if self.tok.text == "-":
                self.take()
                sign = -1
            ex = self.atom()
            if not ex.is_constant() or ex.constant_value().denominator != 1:
                self.fail("exponent must be an integer constant", op.pos)
            k = sign * ex.constant_value().numerator
            try:
                return b ** k
            except ZeroDivisionError:
                self.fail("zero raised to a negative power", op.pos)
        return b

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.take()
            return Expr.lift(Fraction(t.text))
        if t.text == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if t.kind == "name":
            if t.text in ("u", "t") and self.toks[self.i + 1].text == "[":
                return Expr.lift(self.coord())
            if t.text in FUNCTIONS:
                self.take()
                self.take("(")
                arg = self.expr()
                self.take(")")
                try:
                    return apply_function(t.text, arg)
                except ValueError as exc:
                    self.fail(str(exc), t.pos)
            self.fail(f"unknown name {t.text!r}", t.pos)
        got = repr(t.text) if t.text else "end of input"
        self.fail(f"unexpected {got}", t.pos)

    def int_tok(self) -> tuple[int, int]:
        t = self.take(kind="num")
        if not t.text.isdigit():
            self.fail("index must be a positive integer", t.pos)
        return int(t.text), t.pos

    def coord(self) -> Coord:
        head = self.take()
        self.take("[")
        a, apos = self.int_tok()
        idx: list[tuple[int, int]] = []
        if head.text == "t":
            if not self.allow_t:
                self.fail("t[i] is only allowed in curve definitions", head.pos)
            self.take("]")
            if a < 1 or (self.dims is not None and a > self.dims.m):
                self.fail(f"parameter index {a} out of range", apos)
            return Coord(0, a, ())
        if self.tok.text == ";":
            self.take()
            idx.append(self.int_tok())
            while self.tok.text == ",":
                self.take()
                idx.append(self.int_tok())
        self.take("]")
        if a < 1 or (self.dims is not None and a > self.dims.n):
            self.fail(f"base index {a} out of range", apos)
        for i, ipos in idx:
            if i < 1 or (self.dims is not None and i > self.dims.m):
                self.fail(f"counting index {i} out of range", ipos)
        if len(idx) > MAX_ORDER:
            self.fail(f"jet order {len(idx)} exceeds {MAX_ORDER}", head.pos)
        try:
            return Coord.make(a, *(i for i, _ in idx))
        except OrderOverflowError as exc:  # pragma: no cover - caught above
            self.fail(str(exc), head.pos)


def parse_expr(
    text: str,
    dims: Dimensions | None = None,
    *,
    allow_t: bool = False,
    line: int = 1,
    column: int = 1,
) -> Expr:
    """Parse expression text.  With ``dims`` the coordinate indices are
    range-checked.  ``line``/``column`` offset error positions when the text
    is embedded in a larger file."""
    return _Parser(text, dims, allow_t, line, column).parse()


def parse_coord(text: str, dims: Dimensions | None = None) -> Coord:
    e = parse_expr(text, dims)
    if len(e.terms) == 1:
        (mono, c), = e.terms.items()
        if c == 1 and len(mono) == 1 and mono[0][1] == 1 and isinstance(mono[0][0], Coord):
            return mono[0][0]
    raise ParseError(f"{text!r} is not a coordinate")
