"""Floating-point evaluation of terms, used only by test oracles and fuzzers."""

from __future__ import annotations

import math
from typing import Mapping, Optional

from .canonizer import DomainError
from .terms import App, NaNTerm, Num, Param, Quote, Term, Var

_TINY = 1e-12


def _uninterpreted(name: str, args):
    # a fixed smooth function standing in for user-declared symbols
    h = sum(ord(ch) for ch in name) % 7 + 1
    return sum(math.sin(h * (i + 1) * a) + a / h for i, a in enumerate(args))


def _pow(b: float, e: float) -> float:
    if b == 0 and e < 0:
        raise DomainError("zero to a negative power")
    if b < 0 and not float(e).is_integer():
        raise DomainError("negative base with fractional exponent")
    try:
        r = b**e
    except OverflowError as exc:
        raise DomainError("overflow") from exc
    if isinstance(r, complex) or math.isinf(r) or math.isnan(r):
        raise DomainError("non-real power")
    return r


def evaluate(
    t: Term,
    params: Optional[Mapping[str, float]] = None,
    assignment: Optional[Mapping[Var, float]] = None,
) -> float:
    params = params or {}
    assignment = assignment or {}

    def go(u: Term) -> float:
        ty = type(u)
        if ty is Num:
            return float(u.value)
        if ty is Param:
            if u.name not in params:
                raise KeyError(f"unbound parameter {u.name}")
            return float(params[u.name])
        if ty is Var:
            if u not in assignment:
                raise KeyError(f"unassigned variable {u.name}")
            return float(assignment[u])
        if ty is Quote:
            return go(u.inner)
        if ty is NaNTerm:
            raise DomainError("NaN has no value")
        f = u.fun
        a = [go(x) for x in u.args]
        if f == "+":
            return a[0] + a[1]
        if f == "-":
            return a[0] - a[1]
        if f == "*":
            return a[0] * a[1]
        if f == "/":
            if abs(a[1]) < _TINY:
                raise DomainError("division by zero")
            return a[0] / a[1]
        if f == "^":
            return _pow(a[0], a[1])
        if f == "uminus":
            return -a[0]
        if f == "sqrt":
            if a[0] < 0:
                raise DomainError("square root of a negative")
            return math.sqrt(a[0])
        if f == "sin":
            return math.sin(a[0])
        if f == "cos":
            return math.cos(a[0])
        if f == "sin_n":
            return math.sin(a[0] * a[1])
        if f == "cos_n":
            return math.cos(a[0] * a[1])
        if f == "pwr_n":
            return _pow(a[0], a[1])
        if f == "s":
            return a[0] + 1
        if f in ("to_succ", "normalize"):
            return a[0]
        return _uninterpreted(f, a)

    return go(t)


def close(a: float, b: float, rel: float = 1e-9) -> bool:
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))
