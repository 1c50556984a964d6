"""Isolating one parameter of an equation.

``solve_for`` handles equations that become polynomial in the target after
clearing denominators and one layer of square roots, and that are then
linear in the target or quadratic without a linear term.  Everything else
yields ``NaN``.  Square roots take the positive branch: all parameters are
assumed positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Union

from .canonizer import DomainError, to_poly
from .engine import ari_closure, desugar
from .numeric import evaluate
from .parser import normalize_param_name, parse_equation
from .poly import Poly, mono_mul, poly_to_term
from .terms import App, NaN, NaNTerm, Num, Param, Term, iter_subterms

VALIDITY_DOMAIN = "all parameters > 0"


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term

    @staticmethod
    def parse(text: str) -> "Equation":
        lhs, rhs = parse_equation(text)
        return Equation(lhs, rhs)

    def __str__(self):
        from .printer import equation_text

        return equation_text(self.lhs, self.rhs)


class Unsolvable(Exception):
    pass


def _mentions(atom, target: Param) -> bool:
    return any(u == target for u in iter_subterms(atom))


def _clear_denominators(p: Poly) -> Poly:
    for _ in range(20):
        worst: dict = {}
        for m in p.terms:
            for a, e in m:
                if e < 0:
                    worst[a] = max(worst.get(a, 0), -e)
        if not worst:
            return p
        for a, k in worst.items():
            p = p * Poly.atom(a, k)
        p = to_poly(poly_to_term(p))
    raise Unsolvable("denominators do not clear")


def _radical_atoms(p: Poly, target: Param) -> list:
    out = []
    for a in p.atoms():
        if (
            type(a) is App
            and a.fun == "^"
            and type(a.args[1]) is Num
            and a.args[1].value.denominator != 1
            and _mentions(a, target)
        ):
            out.append(a)
    return out


def _eliminate_radical(p: Poly, r) -> Poly:
    """``Q + R*r = 0`` becomes ``Q^2 - R^2 * radicand = 0`` for ``r = B^(1/2)``."""
    if r.args[1].value != Fraction(1, 2):
        raise Unsolvable("only square roots are cleared")
    if p.degree_in(r) > 1:
        raise Unsolvable("radical occurs non-linearly")
    q = p.coeff_in(r, 0)
    rr = p.coeff_in(r, 1)
    radicand = to_poly(r.args[0])
    return to_poly(poly_to_term(q * q - rr * rr * radicand))


def _coefficients(p: Poly, target: Param) -> dict:
    for a in p.atoms():
        if a != target and _mentions(a, target):
            raise Unsolvable("target occurs inside a non-polynomial atom")
    if p.min_degree_in(target) < 0:
        raise Unsolvable("negative power of the target")
    return {k: p.coeff_in(target, k) for k in range(p.degree_in(target) + 1)}


def _normalize_fraction(num: Poly, den: Poly) -> Poly:
    """``num / den`` with monomial denominators divided out and the rest made monic."""
    if den.is_zero():
        raise Unsolvable("zero leading coefficient")
    (lead_m, lead_c), *_ = den.sorted_terms()
    # divide by the gcd monomial of the denominator and by its leading coefficient
    common = dict(lead_m)
    for m in den.terms:
        dm = dict(m)
        for a in list(common):
            common[a] = min(common[a], dm.get(a, 0))
            if common[a] <= 0:
                del common[a]
    inv = tuple((a, -e) for a, e in sorted(common.items(), key=lambda ae: str(ae[0])))
    scale = Poly({inv: 1 / lead_c})
    num, den = num * scale, den * scale
    if den.is_const():
        return num.scale(1 / den.const_value())
    return num * Poly.atom(poly_to_term(den), -1)


def _as_term(p: Poly) -> Term:
    return poly_to_term(p)


def solve_for(
    eq: Equation,
    target: Union[Param, str],
    tprime: bool = False,
    normalize: bool = True,
) -> Term:
    """Expression for ``target`` implied by ``eq``, or ``NaN``."""
    if isinstance(target, str):
        target = Param(normalize_param_name(target))
    try:
        expr = _solve(eq, target)
        return ari_closure(expr, tprime) if normalize else expr
    except (Unsolvable, DomainError, ValueError, ZeroDivisionError, RecursionError, ArithmeticError):
        return NaN
    except Exception:  # solve_for is total; unexpected shapes also yield NaN
        return NaN


def _solve(eq: Equation, target: Param) -> Term:
    if isinstance(eq.lhs, NaNTerm) or isinstance(eq.rhs, NaNTerm):
        raise Unsolvable("NaN input")
    p = to_poly(desugar(App("-", (eq.lhs, eq.rhs))))
    p = _clear_denominators(p)
    for _ in range(3):
        rads = _radical_atoms(p, target)
        if not rads:
            break
        p = _clear_denominators(_eliminate_radical(p, rads[0]))
    else:
        raise Unsolvable("too many radicals")
    coeffs = _coefficients(p, target)
    degree = max(coeffs)
    if degree == 0 or coeffs[degree].is_zero():
        raise Unsolvable("target absent")
    if degree == 1:
        return _as_term(_normalize_fraction(-coeffs[0], coeffs[1]))
    if degree == 2 and coeffs[1].is_zero():
        inner = _normalize_fraction(-coeffs[0], coeffs[2])
        return App("^", (_as_term(inner), Num(Fraction(1, 2))))
    raise Unsolvable(f"degree {degree} in the target")


def eval_numeric(t: Term, values: Mapping) -> float:
    """Float value of ``t`` with parameters bound by name (or by ``Param``)."""
    params = {(k.name if isinstance(k, Param) else normalize_param_name(k)): float(v) for k, v in values.items()}
    return evaluate(t, params)
