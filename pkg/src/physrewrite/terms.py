"""Term representation and basic tree operations.

Terms are immutable and hashable.  There are five node kinds:

* ``Var``    -- a rewrite-rule variable, foreground or background
* ``Param``  -- a problem parameter (a Skolem constant such as ``m_1``)
* ``Num``    -- an exact rational number
* ``App``    -- application of a function symbol from a closed table
* ``Quote``  -- the opaque number wrapper used for built-in arithmetic
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator, Mapping, Union

# name -> arity.  The set is closed; see ``declare_symbol`` for analysis-only
# extensions coming from user rule files.
ARITY: dict[str, int] = {
    "+": 2,
    "*": 2,
    "^": 2,
    "/": 2,
    "-": 2,
    "uminus": 1,
    "sin": 1,
    "cos": 1,
    "sqrt": 1,
    "sin_n": 2,
    "cos_n": 2,
    "pwr_n": 2,
    "s": 1,
    "to_succ": 1,
    "normalize": 1,
}

BUILTIN_SYMBOLS = frozenset(ARITY)
EXTRA_SYMBOLS: dict[str, int] = {}


class TermError(Exception):
    pass


class ArityError(TermError):
    pass


class InvalidPosition(TermError):
    pass


def declare_symbol(name: str, arity: int) -> None:
    """Register an uninterpreted symbol used only by user rule files."""
    if name in ARITY and ARITY[name] != arity:
        raise ArityError(f"symbol {name!r} already has arity {ARITY[name]}")
    ARITY[name] = arity
    if name not in BUILTIN_SYMBOLS:
        EXTRA_SYMBOLS[name] = arity


class Term:
    __slots__ = ("_hash",)

    def __repr__(self) -> str:
        from .printer import to_text

        return f"<{type(self).__name__} {to_text(self)}>"

    def __str__(self) -> str:
        from .printer import to_text

        return to_text(self)


class Var(Term):
    __slots__ = ("name", "background")

    def __init__(self, name: str, background: bool = False):
        self.name = name
        self.background = background
        self._hash = hash(("V", name, background))

    def __eq__(self, other):
        return (
            type(other) is Var
            and other.name == self.name
            and other.background == self.background
        )

    def __hash__(self):
        return self._hash


class Param(Term):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("P", name))

    def __eq__(self, other):
        return type(other) is Param and other.name == self.name

    def __hash__(self):
        return self._hash


class Num(Term):
    __slots__ = ("value",)

    def __init__(self, value: Union[int, Fraction, str]):
        if isinstance(value, float):
            raise TypeError("Num takes exact values only")
        self.value = Fraction(value)
        self._hash = hash(("N", self.value))

    def __eq__(self, other):
        return type(other) is Num and other.value == self.value

    def __hash__(self):
        return self._hash

    @property
    def is_int(self) -> bool:
        return self.value.denominator == 1


class App(Term):
    __slots__ = ("fun", "args")

    def __init__(self, fun: str, args):
        args = tuple(args)
        arity = ARITY.get(fun)
        if arity is None:
            raise ArityError(f"unknown function symbol {fun!r}")
        if len(args) != arity:
            raise ArityError(f"{fun} expects {arity} argument(s), got {len(args)}")
        self.fun = fun
        self.args = args
        self._hash = hash(("A", fun, args))

    def __eq__(self, other):
        if self is other:
            return True
        return (
            type(other) is App
            and other._hash == self._hash
            and other.fun == self.fun
            and other.args == self.args
        )

    def __hash__(self):
        return self._hash


class Quote(Term):
    __slots__ = ("inner",)

    def __init__(self, inner: Term):
        self.inner = inner
        self._hash = hash(("Q", inner))

    def __eq__(self, other):
        return type(other) is Quote and other._hash == self._hash and other.inner == self.inner

    def __hash__(self):
        return self._hash


class NaNTerm(Term):
    """The solver's failure value.  Never algebraically equal to anything."""

    __slots__ = ()

    def __init__(self):
        self._hash = hash("NaN")

    def __eq__(self, other):
        return type(other) is NaNTerm

    def __hash__(self):
        return self._hash


NaN = NaNTerm()


# -- constructors -----------------------------------------------------------

def num(v) -> Num:
    return Num(v)


def add(a: Term, b: Term) -> App:
    return App("+", (a, b))


def mul(a: Term, b: Term) -> App:
    return App("*", (a, b))


def pow_(a: Term, b: Term) -> App:
    return App("^", (a, b))


def q(t) -> Quote:
    """Quote a term; plain ints and Fractions become quoted numbers."""
    if not isinstance(t, Term):
        t = Num(t)
    return Quote(t)


def fg(name: str) -> Var:
    return Var(name, False)


def bg(name: str) -> Var:
    return Var(name, True)


# -- positional access ------------------------------------------------------

Position = tuple


def children(t: Term) -> tuple:
    if type(t) is App:
        return t.args
    if type(t) is Quote:
        return (t.inner,)
    return ()


def with_children(t: Term, kids) -> Term:
    if type(t) is App:
        kids = tuple(kids)
        if kids == t.args:
            return t
        return App(t.fun, kids)
    if type(t) is Quote:
        (inner,) = kids
        return t if inner is t.inner else Quote(inner)
    return t


def subterm_at(t: Term, p) -> Term:
    for i in p:
        kids = children(t)
        if not 0 <= i < len(kids):
            raise InvalidPosition(f"no child {i} below {t}")
        t = kids[i]
    return t


def replace_at(t: Term, p, u: Term) -> Term:
    p = tuple(p)
    if not p:
        return u
    kids = list(children(t))
    i = p[0]
    if not 0 <= i < len(kids):
        raise InvalidPosition(f"no child {i} below {t}")
    kids[i] = replace_at(kids[i], p[1:], u)
    return with_children(t, kids)


def positions_of(t: Term) -> list:
    """All positions of ``t`` in pre-order (root first, children left to right)."""
    out = []

    def walk(u, path):
        out.append(path)
        for i, k in enumerate(children(u)):
            walk(k, path + (i,))

    walk(t, ())
    return out


def iter_subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        stack.extend(reversed(children(u)))


def vars_of(t: Term) -> set:
    return {u for u in iter_subterms(t) if type(u) is Var}


def params_of(t: Term) -> set:
    return {u for u in iter_subterms(t) if type(u) is Param}


def is_ground(t: Term) -> bool:
    return not any(type(u) is Var for u in iter_subterms(t))


def contains_quote(t: Term) -> bool:
    return any(type(u) is Quote for u in iter_subterms(t))


def size(t: Term) -> int:
    return sum(1 for _ in iter_subterms(t))


# -- substitution -----------------------------------------------------------

def apply_subst(t: Term, sigma: Mapping[Var, Term]) -> Term:
    if not sigma:
        return t
    cache: dict = {}

    def go(u):
        ty = type(u)
        if ty is Var:
            return sigma.get(u, u)
        if ty is App or ty is Quote:
            r = cache.get(u)
            if r is None:
                r = with_children(u, [go(k) for k in children(u)])
                cache[u] = r
            return r
        return u

    return go(t)


def compose(s1: Mapping, s2: Mapping) -> dict:
    """Substitution equal to applying ``s1`` then ``s2``."""
    out = {v: apply_subst(t, s2) for v, t in s1.items()}
    for v, t in s2.items():
        out.setdefault(v, t)
    return {v: t for v, t in out.items() if t != v}


def rename(t: Term, suffix: str) -> Term:
    return apply_subst(t, {v: Var(v.name + suffix, v.background) for v in vars_of(t)})
