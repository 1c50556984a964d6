"""Sparse multivariate polynomials with rational coefficients over term atoms.

A monomial is a sorted tuple of ``(atom, exponent)`` pairs where ``atom`` is
any hashable term (a variable, a parameter, or an opaque application such as
``sin(x)``) and ``exponent`` is a nonzero integer.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Tuple

Monomial = Tuple[tuple, ...]


@lru_cache(maxsize=None)
def atom_key(atom) -> str:
    from .printer import to_text

    return to_text(atom)


def _mono_key(m: Monomial):
    return tuple(atom_key(a) for a, _ in m), tuple(e for _, e in m)


def mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d: Dict = dict(m1)
    for a, e in m2:
        n = d.get(a, 0) + e
        if n:
            d[a] = n
        else:
            d.pop(a, None)
    return tuple(sorted(d.items(), key=lambda ae: atom_key(ae[0])))


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms: Dict[Monomial, Fraction] | None = None):
        self.terms = {m: c for m, c in (terms or {}).items() if c}

    @staticmethod
    def const(c) -> "Poly":
        return Poly({(): Fraction(c)})

    @staticmethod
    def atom(a, e: int = 1) -> "Poly":
        return Poly({((a, e),): Fraction(1)})

    def is_const(self) -> bool:
        return all(not m for m in self.terms)

    def const_value(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __add__(self, other: "Poly") -> "Poly":
        d = dict(self.terms)
        for m, c in other.terms.items():
            d[m] = d.get(m, 0) + c
        return Poly(d)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        d: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                d[m] = d.get(m, 0) + c1 * c2
        return Poly(d)

    def scale(self, c) -> "Poly":
        return Poly({m: c * v for m, v in self.terms.items()})

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative power of a polynomial")
        result = Poly.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def atoms(self) -> set:
        return {a for m in self.terms for a, _ in m}

    def degree_in(self, atom) -> int:
        return max((dict(m).get(atom, 0) for m in self.terms), default=0)

    def min_degree_in(self, atom) -> int:
        return min((dict(m).get(atom, 0) for m in self.terms), default=0)

    def coeff_in(self, atom, k: int) -> "Poly":
        """Coefficient polynomial of ``atom**k``."""
        d = {}
        for m, c in self.terms.items():
            dm = dict(m)
            if dm.get(atom, 0) == k:
                dm.pop(atom, None)
                rest = tuple(sorted(dm.items(), key=lambda ae: atom_key(ae[0])))
                d[rest] = d.get(rest, 0) + c
        return Poly(d)

    def sorted_terms(self) -> Iterable:
        """Monomials by descending total degree, then atom name; constant last."""

        def key(item):
            m, _ = item
            deg = sum(e for _, e in m)
            return (not m, -deg, _mono_key(m))

        return sorted(self.terms.items(), key=key)

    def __repr__(self):
        from .printer import to_text

        return f"Poly({to_text(poly_to_term(self))})"


def poly_to_term(p: Poly):
    """Render ``p`` as a left-nested sum of coefficient-times-factor products."""
    from .terms import App, Num

    if p.is_zero():
        return Num(0)
    summands = []
    for m, c in p.sorted_terms():
        factors = []
        for a, e in m:
            factors.append(a if e == 1 else App("^", (a, Num(e))))
        if not factors:
            summands.append(Num(c))
            continue
        if c != 1:
            factors.insert(0, Num(c))
        prod = factors[0]
        for f in factors[1:]:
            prod = App("*", (prod, f))
        summands.append(prod)
    out = summands[0]
    for s in summands[1:]:
        out = App("+", (out, s))
    return out
