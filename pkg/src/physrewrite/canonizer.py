"""Built-in arithmetic: ``simp`` on quote-free terms and its extension into quotes.

``simp`` maps a quote-free term to a polynomial normal form over opaque
atoms (variables, ``sin``/``cos`` applications, non-integer powers).  Ground
trig-free terms always come out as a single number.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .poly import Poly, poly_to_term
from .terms import App, Num, Param, Quote, Term, Var, with_children


class DomainError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CanonResult:
    term: Term
    is_number: bool


def _exact_root(c: Fraction, q: int) -> Optional[Fraction]:
    if c < 0:
        return None

    def iroot(n: int) -> Optional[int]:
        r = round(n ** (1.0 / q)) if n else 0
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**q == n:
                return cand
        return None

    a, b = iroot(c.numerator), iroot(c.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def _rational_power(c: Fraction, e: Fraction) -> Poly:
    """``c ** e`` for rationals, exact where possible, else an opaque atom."""
    if e.denominator == 1:
        k = e.numerator
        if c == 0 and k < 0:
            raise DomainError("division by zero")
        return Poly.const(c**k)
    if c == 0:
        if e > 0:
            return Poly.const(0)
        raise DomainError("division by zero")
    if c == 1:
        return Poly.const(1)
    whole = e.numerator // e.denominator
    frac = e - whole
    root = _exact_root(c, frac.denominator)
    if root is not None:
        return Poly.const(c**whole * root**frac.numerator)
    coeff = c**whole
    return Poly.atom(App("^", (Num(c), Num(frac)))).scale(coeff)


def _fold_radicals(p: Poly) -> Poly:
    # integer powers of atoms c^r fold back into the coefficient
    out = Poly()
    for m, coeff in p.terms.items():
        term = Poly.const(coeff)
        for a, e in m:
            if (
                type(a) is App
                and a.fun == "^"
                and type(a.args[0]) is Num
                and type(a.args[1]) is Num
            ):
                term = term * _rational_power(a.args[0].value, a.args[1].value * e)
            else:
                term = term * Poly.atom(a, e)
        out = out + term
    return out


def _inverse(p: Poly) -> Poly:
    if p.is_zero():
        raise DomainError("division by zero")
    if p.is_monomial():
        (m, c), = p.terms.items()
        inv = Poly({tuple((a, -e) for a, e in m): 1 / c})
        return _fold_radicals(inv)
    return Poly.atom(poly_to_term(p), -1)


def _power(base: Poly, expo: Poly) -> Poly:
    if expo.is_const():
        e = expo.const_value()
        if base.is_const():
            return _rational_power(base.const_value(), e)
        if e.denominator == 1:
            k = e.numerator
            if k >= 0:
                return base**k
            return _inverse(base) ** (-k)
        if base.is_monomial():
            (m, c), = base.terms.items()
            if not m:
                return _rational_power(c, e)
    if base.is_const() and base.const_value() == 1:
        return Poly.const(1)
    return Poly.atom(App("^", (poly_to_term(base), poly_to_term(expo))))


def _trig(fun: str, arg: Poly) -> Poly:
    if arg.is_zero():
        return Poly.const(0 if fun == "sin" else 1)
    return Poly.atom(App(fun, (poly_to_term(arg),)))


def to_poly(t: Term) -> Poly:
    ty = type(t)
    if ty is Num:
        return Poly.const(t.value)
    if ty is Var or ty is Param:
        return Poly.atom(t)
    if ty is Quote:
        raise ValueError(f"simp applies to quote-free terms only: {t}")
    if ty is not App:
        raise ValueError(f"cannot simplify {t!r}")
    f = t.fun
    if f == "+":
        return to_poly(t.args[0]) + to_poly(t.args[1])
    if f == "-":
        return to_poly(t.args[0]) - to_poly(t.args[1])
    if f == "*":
        return _fold_radicals(to_poly(t.args[0]) * to_poly(t.args[1]))
    if f == "/":
        return _fold_radicals(to_poly(t.args[0]) * _inverse(to_poly(t.args[1])))
    if f == "uminus":
        return -to_poly(t.args[0])
    if f == "^":
        return _power(to_poly(t.args[0]), to_poly(t.args[1]))
    if f == "sqrt":
        return _power(to_poly(t.args[0]), Poly.const(Fraction(1, 2)))
    if f in ("sin", "cos"):
        return _trig(f, to_poly(t.args[0]))
    if f == "s":
        return to_poly(t.args[0]) + Poly.const(1)
    if f == "to_succ":
        return to_poly(t.args[0])
    return Poly.atom(App(f, tuple(poly_to_term(to_poly(a)) for a in t.args)))


def simp(t: Term) -> Term:
    """Canonical form of a quote-free term; a ``Num`` whenever one is derivable."""
    return poly_to_term(to_poly(t))


def simp_result(t: Term) -> CanonResult:
    out = simp(t)
    return CanonResult(out, type(out) is Num)


def deep_simp(t: Term) -> Term:
    """Apply ``simp`` inside every quote, leaving everything else in place."""
    ty = type(t)
    if ty is Quote:
        inner = t.inner
        if type(inner) is Num or type(inner) is Var:
            return t
        s = simp(inner)
        return t if s == inner else Quote(s)
    if ty is App:
        return with_children(t, [deep_simp(a) for a in t.args])
    return t
