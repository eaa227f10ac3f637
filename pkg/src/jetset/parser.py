"""Surface expression language: Pratt parser and canonical printer.

Grammar (precedence low to high: ``+ -`` < ``* /`` < unary ``-`` < ``^``,
with ``^`` right-associative and restricted to integer exponents):

    expr    := term (('+'|'-') term)*
    term    := unary (('*'|'/') unary)*
    unary   := '-' unary | power
    power   := atom ['^' unary]
    atom    := INT | IDENT | IDENT '(' expr [',' INT] ')' | '(' expr ')'

Identifiers resolve, in order, against: named definitions of the
environment, coordinates (``x y z q``, ``y0 z0`` aliases), jet variables
(``y12`` is the 12th derivative of y), extension generators (``E_x2`` is
e^(x/2); ``E_x`` rewrites to ``E_x2^2`` when the finer generator is in
scope), declared formal functions and their partials (``a_xy``), and bound
rational parameters.  The only call-style function is ``D`` for the total
derivative; ``D(e, k)`` iterates it k times.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .errors import ParseError, UnknownIdentifier
from .ratcore import (
    EXTENSION_ALIASES,
    KNOWN_EXTENSIONS,
    Monomial,
    Poly,
    Rat,
    RatFun,
    _mono_key,
    base,
    formal,
    jet,
    var_name,
)

# -- AST ----------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int
    pos: tuple[int, int]


@dataclass(frozen=True)
class Name:
    ident: str
    pos: tuple[int, int]


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    pos: tuple[int, int]


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Expr"
    right: "Expr"
    pos: tuple[int, int]


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]
    pos: tuple[int, int]


Expr = Union[Num, Name, Unary, Bin, Call]


# -- tokenizer ----------------------------------------------------------

class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            tokens.append(_Token("int", src[i:j], line, col))
            col += j - i
            i = j
        elif ch.isalpha():
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(_Token("ident", src[i:j], line, col))
            col += j - i
            i = j
        elif ch in "-+*/^(),":
            tokens.append(_Token("op", ch, line, col))
            col += 1
            i += 1
        else:
            raise ParseError(line, col, f"token (got {ch!r})")
    tokens.append(_Token("eof", "", line, col))
    return tokens


# -- parser -------------------------------------------------------------

_BIN_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_PREC = 30


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect_op(self, op: str) -> _Token:
        t = self.peek()
        if t.kind != "op" or t.text != op:
            raise ParseError(t.line, t.col, f"{op!r}")
        return self.advance()

    def parse(self) -> Expr:
        e = self.expression(0)
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(t.line, t.col, "end of input")
        return e

    def expression(self, rbp: int) -> Expr:
        left = self.nud()
        while True:
            t = self.peek()
            if t.kind != "op" or t.text not in _BIN_PREC:
                break
            prec = _BIN_PREC[t.text]
            if prec <= rbp:
                break
            self.advance()
            # right-associative exponent binds its own level minus one
            right = self.expression(prec - 1 if t.text == "^" else prec)
            left = Bin(t.text, left, right, (t.line, t.col))
        return left

    def nud(self) -> Expr:
        t = self.advance()
        if t.kind == "int":
            return Num(int(t.text), (t.line, t.col))
        if t.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                self.advance()
                args = [self.expression(0)]
                while self.peek().kind == "op" and self.peek().text == ",":
                    self.advance()
                    args.append(self.expression(0))
                self.expect_op(")")
                return Call(t.text, tuple(args), (t.line, t.col))
            return Name(t.text, (t.line, t.col))
        if t.kind == "op" and t.text == "(":
            e = self.expression(0)
            self.expect_op(")")
            return e
        if t.kind == "op" and t.text == "-":
            return Unary("-", self.expression(_UNARY_PREC), (t.line, t.col))
        raise ParseError(t.line, t.col, "operand")


def parse_ast(src: str) -> Expr:
    return _Parser(_tokenize(src)).parse()


# -- lowering -----------------------------------------------------------

_JET_RE = re.compile(r"^([yz])(\d+)$")
_FORMAL_RE = re.compile(r"^([A-Za-z]+)_(x*)(y*)$")


@dataclass
class ParseEnv:
    """Name-resolution environment used when lowering an AST."""

    defs: dict[str, RatFun] = field(default_factory=dict)
    formals: set[str] = field(default_factory=set)
    params: dict[str, Rat] = field(default_factory=dict)


def _resolve(name: str, ctx, env: ParseEnv, pos) -> RatFun:
    if name in env.params:
        return RatFun.const(env.params[name])
    if name in ("x", "y"):
        return RatFun(Poly.var(base(0 if name == "x" else 1)))
    if name == "z" and ctx.num_dependent >= 2:
        return RatFun(Poly.var(base(2)))
    if name == "q" and getattr(ctx, "allow_q", False):
        return RatFun(Poly.var(base(3)))
    m = _JET_RE.match(name)
    if m:
        alpha = 0 if m.group(1) == "y" else 1
        k = int(m.group(2))
        if alpha == 1 and ctx.num_dependent < 2:
            raise UnknownIdentifier(pos[0], pos[1], name)
        if k == 0:
            return RatFun(Poly.var(base(1 + alpha)))
        if k > ctx.max_order:
            raise ParseError(pos[0], pos[1],
                             f"jet order <= {ctx.max_order} (got {name})")
        return RatFun(Poly.var(jet(alpha, k)))
    if name in ctx.ext_names:
        return RatFun(Poly.var(KNOWN_EXTENSIONS[name].var))
    if name in EXTENSION_ALIASES:
        root, k = EXTENSION_ALIASES[name]
        if root in ctx.ext_names:
            return RatFun(Poly.var(KNOWN_EXTENSIONS[root].var, k))
        if name in KNOWN_EXTENSIONS:
            raise UnknownIdentifier(pos[0], pos[1], name)
    m = _FORMAL_RE.match(name)
    if m and m.group(1) in env.formals:
        return RatFun(Poly.var(formal(m.group(1), len(m.group(2)), len(m.group(3)))))
    if name in env.formals:
        return RatFun(Poly.var(formal(name, 0, 0)))
    raise UnknownIdentifier(pos[0], pos[1], name)


def _const_int(e: Expr) -> int:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Unary) and e.op == "-":
        return -_const_int(e.operand)
    pos = e.pos
    raise ParseError(pos[0], pos[1], "integer literal")


def _lower(e: Expr, ctx, env: ParseEnv, ring):
    if isinstance(e, Num):
        return ring.const(e.value)
    if isinstance(e, Name):
        if e.ident in env.defs:
            return env.defs[e.ident]
        return ring.lift(_resolve(e.ident, ctx, env, e.pos))
    if isinstance(e, Unary):
        return -_lower(e.operand, ctx, env, ring)
    if isinstance(e, Call):
        if e.func != "D":
            raise ParseError(e.pos[0], e.pos[1], f"function D (got {e.func!r})")
        if len(e.args) not in (1, 2):
            raise ParseError(e.pos[0], e.pos[1], "D(expr) or D(expr, k)")
        val = _lower(e.args[0], ctx, env, ring)
        k = _const_int(e.args[1]) if len(e.args) == 2 else 1
        for _ in range(k):
            val = ring.dx(val)
        return val
    if isinstance(e, Bin):
        left = _lower(e.left, ctx, env, ring)
        if e.op == "^":
            return left ** _const_int(e.right)
        right = _lower(e.right, ctx, env, ring)
        if e.op == "+":
            return left + right
        if e.op == "-":
            return left - right
        if e.op == "*":
            return left * right
        try:
            return left / right
        except ZeroDivisionError:
            raise ParseError(e.pos[0], e.pos[1], "nonzero divisor") from None
    raise TypeError(f"unexpected AST node {e!r}")


def parse_expr(src: str, ctx, env: Optional[ParseEnv] = None, ring=None) -> RatFun:
    """Parse a surface expression into an exact rational function.

    A ring adapter (see chains.RatRing / chains.ChainAdapter) switches the
    arithmetic; the default evaluates to a RatFun with D = D_x.
    """
    if ring is None:
        from .chains import RatRing

        ring = RatRing(ctx)
    return _lower(parse_ast(src), ctx, env or ParseEnv(), ring)


# -- canonical printer ---------------------------------------------------


def _format_coeff(c: Rat) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _format_term(m: Monomial, c: Rat) -> str:
    if not m:
        return _format_coeff(abs(c))
    vars_part = "*".join(
        var_name(v) if e == 1 else f"{var_name(v)}^{e}" for v, e in m
    )
    a = abs(c)
    if a == 1:
        return vars_part
    return f"{_format_coeff(a)}*{vars_part}"


def format_poly(p: Poly) -> str:
    """Canonical text form: terms in descending graded-lex order."""
    if p.is_zero():
        return "0"
    terms = sorted(p.t.items(), key=lambda kv: _mono_key(kv[0]), reverse=True)
    parts = []
    for i, (m, c) in enumerate(terms):
        body = _format_term(m, c)
        if i == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return " ".join(parts)


def format_ratfun(r: RatFun) -> str:
    if r.den.is_constant() and r.den.constant_value() == 1:
        return format_poly(r.num)
    return f"({format_poly(r.num)})/({format_poly(r.den)})"
