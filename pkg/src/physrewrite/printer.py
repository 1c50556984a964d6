"""Infix printer emitting minimal parentheses for the parser's grammar."""

from __future__ import annotations

from fractions import Fraction

from .terms import App, NaNTerm, Num, Param, Quote, Term, Var

_BINARY = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}
_ATOM = 4


def format_number(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    d = v.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        # finite decimal: scale up to an exact integer string
        digits = 0
        scaled = v
        while scaled.denominator != 1:
            scaled *= 10
            digits += 1
        sign = "-" if scaled < 0 else ""
        s = str(abs(scaled.numerator)).rjust(digits + 1, "0")
        return f"{sign}{s[:-digits]}.{s[-digits:]}"
    return f"({v.numerator}/{v.denominator})"


def _prec(t: Term) -> int:
    if type(t) is App and t.fun in _BINARY:
        return _BINARY[t.fun]
    return _ATOM


def to_text(t: Term, flat: bool = False) -> str:
    """Render ``t``.  With ``flat`` right-nested ``+``/``*`` chains print
    without grouping, which is how normal forms are usually displayed."""

    def go(u: Term, need: int) -> str:
        s = render(u)
        return f"({s})" if _prec(u) < need else s

    def render(u: Term) -> str:
        ty = type(u)
        if ty is Num:
            return format_number(u.value)
        if ty is Param or ty is Var:
            return u.name
        if ty is Quote:
            return f"[{go(u.inner, 0)}]"
        if ty is NaNTerm:
            return "NaN"
        if u.fun in _BINARY:
            p = _BINARY[u.fun]
            a, b = u.args
            if u.fun == "^":
                return f"{go(a, p + 1)}^{go(b, p)}"
            right_need = p + 1
            if flat and u.fun in ("+", "*") and type(b) is App and b.fun == u.fun:
                right_need = p
            sep = " " if p == 1 else ""
            return f"{go(a, p)}{sep}{u.fun}{sep}{go(b, right_need)}"
        if u.fun == "uminus":
            (a,) = u.args
            if type(a) is Num and a.value >= 0:
                return f"-({render(a)})"
            return f"-{go(a, _ATOM)}"
        return f"{u.fun}({', '.join(go(k, 0) for k in u.args)})"

    return render(t)


def equation_text(lhs: Term, rhs: Term, flat: bool = True) -> str:
    return f"{to_text(lhs, flat)} = {to_text(rhs, flat)}"
