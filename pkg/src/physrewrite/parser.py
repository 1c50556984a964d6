"""Recursive-descent parser for expressions and equations.

Grammar::

    expr     := term (("+"|"-") term)*
    term     := factor (("*"|"/") factor)*
    factor   := atom ("^" factor)?                  right associative
    atom     := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")"
              | "(" expr ")" | "-" atom | "[" expr "]"
    equation := "Eq(" expr "," expr ")" | expr "=" expr

``**`` is accepted as a synonym for ``^`` and ``⟦ ⟧`` for the quote brackets.
A ``-`` immediately followed by a number literal is read as a negative
number literal.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping, Optional

from .terms import ARITY, App, ArityError, Num, Param, Quote, Term, Var

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^(),=\[\]⟦⟧]))"
)

_PARAM_DIGITS = re.compile(r"^([A-Za-z]+)(\d+)$")


class ParseError(SyntaxError):
    def __init__(self, msg: str, offset: int, text: str = ""):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset
        self.text = text


def normalize_param_name(name: str) -> str:
    """``m1`` -> ``m_1``; names that already carry an underscore are kept."""
    m = _PARAM_DIGITS.match(name)
    if m:
        return f"{m.group(1)}_{m.group(2)}"
    return name


def _tokenize(text: str):
    pos = 0
    toks = []
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        val = m.group(kind)
        if val == "**":
            val = "^"
        elif val == "⟦":
            val = "["
        elif val == "⟧":
            val = "]"
        toks.append((kind, val, start))
        pos = m.end()
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, variables: Mapping[str, Var]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, val: str):
        kind, v, off = self.take()
        if v != val or kind == "end" and val:
            raise ParseError(f"expected {val!r}, found {v or 'end of input'!r}", off, self.text)

    def at(self, val: str) -> bool:
        kind, v, _ = self.peek()
        return kind == "op" and v == val

    def expr(self) -> Term:
        t = self.term()
        while self.at("+") or self.at("-"):
            op = self.take()[1]
            t = App(op, (t, self.term()))
        return t

    def term(self) -> Term:
        t = self.factor()
        while self.at("*") or self.at("/"):
            op = self.take()[1]
            t = App(op, (t, self.factor()))
        return t

    def factor(self) -> Term:
        base = self.atom()
        if self.at("^"):
            self.take()
            return App("^", (base, self.factor()))
        return base

    def atom(self) -> Term:
        kind, val, off = self.take()
        if kind == "num":
            return Num(Fraction(val))
        if kind == "op" and val == "-":
            nk, nv, _ = self.peek()
            if nk == "num":
                self.take()
                return Num(-Fraction(nv))
            return App("uminus", (self.atom(),))
        if kind == "op" and val == "(":
            t = self.expr()
            self.expect(")")
            return t
        if kind == "op" and val == "[":
            t = self.expr()
            self.expect("]")
            return Quote(t)
        if kind == "ident":
            if self.at("("):
                if val not in ARITY:
                    raise ParseError(f"unknown function {val!r}", off, self.text)
                self.take()
                args = [self.expr()]
                while self.at(","):
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != ARITY[val]:
                    raise ArityError(
                        f"{val} expects {ARITY[val]} argument(s), got {len(args)} at offset {off}"
                    )
                return App(val, args)
            if val in self.variables:
                return self.variables[val]
            if val in ARITY:
                raise ParseError(f"function {val!r} used without arguments", off, self.text)
            return Param(normalize_param_name(val))
        raise ParseError(f"unexpected {val or 'end of input'!r}", off, self.text)

    def finish(self):
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing {val!r}", off, self.text)


def parse_expr(text: str, variables: Optional[Mapping[str, Var]] = None) -> Term:
    """Parse one expression; names in ``variables`` become rule variables."""
    p = _Parser(text, variables or {})
    t = p.expr()
    p.finish()
    return t


def parse_equation(text: str, variables: Optional[Mapping[str, Var]] = None):
    """Parse ``Eq(l, r)`` or ``l = r`` into a ``(lhs, rhs)`` pair."""
    p = _Parser(text, variables or {})
    kind, val, _ = p.peek()
    if kind == "ident" and val == "Eq" and p.toks[p.i + 1][1] == "(":
        p.take()
        p.take()
        lhs = p.expr()
        p.expect(",")
        rhs = p.expr()
        p.expect(")")
        p.finish()
        return lhs, rhs
    lhs = p.expr()
    p.expect("=")
    rhs = p.expr()
    p.finish()
    return lhs, rhs
