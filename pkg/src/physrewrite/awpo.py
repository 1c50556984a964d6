"""Weighted path ordering over terms with quoted arithmetic.

Terms are compared first by weight (see :mod:`physrewrite.weights`); equal
or undecided weights fall through to a lexicographic path ordering with the
precedence ``sin > cos > ^ > * > + > parameters > quote``.  Every quoted
term sits below every unquoted one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .canonizer import DomainError, simp
from .numeric import evaluate
from .terms import App, NaNTerm, Num, Param, Quote, Term, Var, apply_subst, is_ground, params_of, vars_of
from .weights import (
    DISPROVED,
    PROVED,
    UNKNOWN,
    SolverUnavailable,
    ground_weight,
    prove_dominance,
    weight_of,
)

__all__ = [
    "Ord",
    "Evidence",
    "CompareResult",
    "OrderingContext",
    "CANON_ORD",
    "SIMP_ORD",
    "compare",
    "gt",
    "weight_of",
    "prove_dominance",
    "SolverUnavailable",
    "PROVED",
    "DISPROVED",
    "UNKNOWN",
]


class Ord(enum.Enum):
    GT = "GT"
    LT = "LT"
    EQ = "EQ"
    INCOMPARABLE = "Incomparable"


class Evidence(enum.Enum):
    BY_WEIGHT_STRICT = "ByWeightStrict"
    BY_WEIGHT_EQ_THEN_LPO = "ByWeightEqThenLPO"
    SYNTACTIC = "Syntactic"


@dataclass(frozen=True)
class CompareResult:
    result: Ord
    evidence: Optional[Evidence] = None


IS_QUOTE, NOT_QUOTE, UNKNOWN_CASE = "is_quote", "not_quote", "unknown"
LEFT_TO_RIGHT, RIGHT_TO_LEFT = "left_to_right", "right_to_left"


@dataclass(frozen=True)
class OrderingContext:
    """One instance of the ordering.

    ``X`` lists variables treated as constants in decreasing precedence.
    ``quote_case`` records, per variable, whether it stands for a quoted term.
    ``status`` lists symbols compared right to left.
    """

    X: tuple = ()
    quote_case: tuple = ()
    status: tuple = ()
    ground_total: bool = False
    solver_cmd: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if len(set(self.X)) != len(self.X):
            raise ValueError("X must list distinct variables")

    def case_of(self, v: Var) -> str:
        for var, case in self.quote_case:
            if var == v:
                return case
        return UNKNOWN_CASE

    def status_of(self, fun: str) -> str:
        return RIGHT_TO_LEFT if fun in self.status else LEFT_TO_RIGHT

    def with_(self, **changes) -> "OrderingContext":
        data = dict(
            X=self.X,
            quote_case=self.quote_case,
            status=self.status,
            ground_total=self.ground_total,
            solver_cmd=self.solver_cmd,
        )
        data.update(changes)
        if isinstance(data["quote_case"], dict):
            data["quote_case"] = tuple(sorted(data["quote_case"].items(), key=lambda kv: kv[0].name))
        data["X"] = tuple(data["X"])
        data["status"] = tuple(data["status"])
        return OrderingContext(**data)


CANON_ORD = OrderingContext()
SIMP_ORD = OrderingContext(status=("*",))

# symbol precedence, larger binds higher; parameters and quotes are placed below
_CORE = {
    "sin_n": 60,
    "cos_n": 59,
    "pwr_n": 58,
    "s": 57,
    "sin": 50,
    "cos": 49,
    "^": 48,
    "*": 47,
    "+": 46,
}
_PARAM_RANK = 20
_NUM_RANK = 5


def _head(t: Term, ctx: OrderingContext):
    """(strand, rank, tiebreak) of the head symbol, or None for a free variable."""
    ty = type(t)
    if ty is App:
        # symbols outside the core signature sit above it, ordered by name
        return ("sig", _CORE.get(t.fun, 100), t.fun)
    if ty is Param:
        return ("sig", _PARAM_RANK, t.name)
    if ty is Num:
        return ("sig", _NUM_RANK, t.value)
    if ty is NaNTerm:
        return ("sig", 200, "")
    if ty is Var and t in ctx.X:
        return ("X", -ctx.X.index(t), "")
    return None


def _quoteness(t: Term, ctx: OrderingContext) -> str:
    ty = type(t)
    if ty is Quote:
        return IS_QUOTE
    if ty is Var:
        return ctx.case_of(t)
    return NOT_QUOTE


def _quote_gt(s: Quote, t: Quote, ctx: OrderingContext) -> bool:
    if not ctx.ground_total:
        return False
    a, b = s.inner, t.inner
    if type(a) is Var and type(b) is Var and a in ctx.X and b in ctx.X:
        return ctx.X.index(a) < ctx.X.index(b)
    try:
        d = simp(App("-", (a, b)))
    except (ValueError, DomainError):
        d = None
    if type(d) is Num:
        return d.value > 0
    if is_ground(a) and is_ground(b) and not params_of(a) and not params_of(b):
        try:
            va, vb = evaluate(a), evaluate(b)
        except (DomainError, KeyError, OverflowError):
            return False
        if va != vb:
            return va > vb
        return repr(a) > repr(b)
    return False


def _dominance(s: Term, t: Term, strict: bool, ctx: OrderingContext) -> str:
    if not vars_of(s) and not vars_of(t):
        ws, wt = ground_weight(s), ground_weight(t)
        return PROVED if (ws > wt if strict else ws >= wt) else DISPROVED
    ws, wt = weight_of(s), weight_of(t)
    # background variables range over numbers, whose quotes weigh 1
    bgs = {v: Num(1) for v in vars_of(ws) | vars_of(wt) if v.background}
    if bgs:
        ws, wt = apply_subst(ws, bgs), apply_subst(wt, bgs)
    return prove_dominance(ws, wt, strict, ctx.X, solver_cmd=ctx.solver_cmd)


@lru_cache(maxsize=500_000)
def _gt(s: Term, t: Term, ctx: OrderingContext) -> Optional[Evidence]:
    if s == t:
        return None
    qs, qt = _quoteness(s, ctx), _quoteness(t, ctx)
    if qs == IS_QUOTE and qt == IS_QUOTE:
        if type(s) is Quote and type(t) is Quote and _quote_gt(s, t, ctx):
            return Evidence.BY_WEIGHT_EQ_THEN_LPO
        return None
    if qs == NOT_QUOTE and qt == IS_QUOTE:
        return Evidence.BY_WEIGHT_STRICT
    if qs == IS_QUOTE:
        return None
    if type(s) is Var and s not in ctx.X:
        return None

    if _dominance(s, t, True, ctx) == PROVED:
        return Evidence.BY_WEIGHT_STRICT

    sargs = s.args if type(s) is App else ()
    # subterm case: weights are weakly simple, so w(s) >= w(t) holds here
    for a in sargs:
        if a == t or _gt(a, t, ctx) is not None:
            return Evidence.BY_WEIGHT_EQ_THEN_LPO

    hs, ht = _head(s, ctx), _head(t, ctx)
    if ht is None:
        return None
    if _dominance(s, t, False, ctx) != PROVED:
        return None
    targs = t.args if type(t) is App else ()
    if hs[0] != ht[0]:
        return None
    if (hs[1], hs[2]) > (ht[1], ht[2]):
        if all(_gt(s, b, ctx) is not None for b in targs):
            return Evidence.BY_WEIGHT_EQ_THEN_LPO
        return None
    if hs != ht or type(s) is not App:
        return None
    if not all(_gt(s, b, ctx) is not None for b in targs):
        return None
    ls, lt = list(sargs), list(targs)
    if ctx.status_of(s.fun) == RIGHT_TO_LEFT:
        ls.reverse()
        lt.reverse()
    for a, b in zip(ls, lt):
        if a != b:
            return Evidence.BY_WEIGHT_EQ_THEN_LPO if _gt(a, b, ctx) is not None else None
    return None


def gt(s: Term, t: Term, ctx: OrderingContext = CANON_ORD) -> bool:
    return _gt(s, t, ctx) is not None


def compare(s: Term, t: Term, ctx: OrderingContext = CANON_ORD) -> CompareResult:
    if s == t:
        return CompareResult(Ord.EQ, Evidence.SYNTACTIC)
    ev = _gt(s, t, ctx)
    if ev is not None:
        return CompareResult(Ord.GT, ev)
    ev = _gt(t, s, ctx)
    if ev is not None:
        return CompareResult(Ord.LT, ev)
    return CompareResult(Ord.INCOMPARABLE)
