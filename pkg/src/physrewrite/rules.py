"""Constrained rewrite rules and the built-in rule systems.

A rule ``l -> r | C`` carries a list of constraints, each either an ordering
requirement ``x > y`` between foreground variables or a host predicate on
the surface form of a matched subterm (used only by the ``Norm`` system).
"""

from __future__ import annotations

import logging
import math
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .awpo import CANON_ORD, SIMP_ORD, OrderingContext
from .canonizer import DomainError
from .numeric import close, evaluate
from .parser import parse_expr
from .terms import (
    ARITY,
    App,
    Num,
    Param,
    Quote,
    Term,
    Var,
    contains_quote,
    declare_symbol,
    iter_subterms,
    params_of,
    vars_of,
)

log = logging.getLogger(__name__)

HOST_PREDICATES = (
    "is_bg_var",
    "is_fg_var",
    "is_int_geq0",
    "not_int_geq0",
    "is_times_funterm",
    "not_times_funterm",
    "gt0",
)


@dataclass(frozen=True)
class OrderGT:
    x: Var
    y: Var

    def __str__(self):
        return f"{self.x.name} > {self.y.name}"


@dataclass(frozen=True)
class HostPred:
    name: str
    subject: Var

    def __post_init__(self):
        if self.name not in HOST_PREDICATES:
            raise ValueError(f"unknown host predicate {self.name!r}")

    def holds(self, value: Term) -> bool:
        is_nat = type(value) is Num and value.is_int and value.value >= 0
        if self.name == "is_bg_var":
            return type(value) is Num
        if self.name == "is_fg_var":
            return type(value) is Param or (type(value) is Var and not value.background)
        if self.name == "is_int_geq0":
            return is_nat
        if self.name == "not_int_geq0":
            return not is_nat
        if self.name == "is_times_funterm":
            return type(value) is App and value.fun == "*"
        if self.name == "not_times_funterm":
            return not (type(value) is App and value.fun == "*")
        return type(value) is Num and value.value > 0

    def __str__(self):
        return f"{self.name}({self.subject.name})"


Constraint = "OrderGT | HostPred"


@dataclass(frozen=True)
class ConstrainedRule:
    id: str
    lhs: Term
    rhs: Term
    constraint: tuple = ()
    ordering_hint: Optional[str] = None
    # fold variable-free arithmetic outside quotes after instantiation (N5.4)
    host_arith: bool = False

    def __post_init__(self):
        extra = vars_of(self.rhs) - vars_of(self.lhs)
        if extra:
            names = ", ".join(sorted(v.name for v in extra))
            raise ValueError(f"rule {self.id}: right side variables not on left: {names}")

    @property
    def order_constraints(self) -> list:
        return [c for c in self.constraint if isinstance(c, OrderGT)]

    @property
    def host_constraints(self) -> list:
        return [c for c in self.constraint if isinstance(c, HostPred)]

    def __str__(self):
        from .printer import to_text

        s = f"{self.id}: {to_text(self.lhs)} -> {to_text(self.rhs)}"
        if self.constraint:
            s += " | " + ", ".join(str(c) for c in self.constraint)
        return s


@dataclass(frozen=True)
class RuleSystem:
    name: str
    rules: tuple
    ordering: Optional[OrderingContext] = None

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def rule(self, rule_id: str) -> ConstrainedRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    def extended(self, extra: Iterable[ConstrainedRule], name: Optional[str] = None) -> "RuleSystem":
        return RuleSystem(name or self.name, self.rules + tuple(extra), self.ordering)


# -- admissibility ----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    clause: str
    subterm: Term
    message: str

    def __str__(self):
        from .printer import to_text

        return f"({self.clause}) {self.message}: {to_text(self.subterm)}"


def _quoted_and_free_vars(t: Term):
    inside, outside = set(), set()

    def go(u, quoted):
        ty = type(u)
        if ty is Var:
            (inside if quoted else outside).add(u.name)
        elif ty is Quote:
            go(u.inner, True)
        elif ty is App:
            for a in u.args:
                go(a, quoted)

    go(t, False)
    return inside, outside


def check_admissible(rule: ConstrainedRule) -> list:
    """Return the list of violated admissibility clauses (empty when admissible)."""
    out = []
    bg_names, fg_names = set(), set()
    for side in (rule.lhs, rule.rhs):
        i, o = _quoted_and_free_vars(side)
        bg_names |= i
        fg_names |= o
    for c in rule.order_constraints:
        fg_names |= {c.x.name, c.y.name}
    for name in sorted(bg_names & fg_names):
        out.append(Violation("i", Var(name), "variable is both background and foreground"))
    for u in iter_subterms(rule.lhs):
        if type(u) is Quote and type(u.inner) not in (Num, Var):
            out.append(Violation("ii", u, "left-side quote is neither a number nor a variable"))
    for u in iter_subterms(rule.rhs):
        if type(u) is Quote and (params_of(u.inner) or contains_quote(u.inner)):
            out.append(Violation("iii", u, "right-side quote is not parameter-free and quote-free"))
    return out


# Rules whose whole purpose is to move a value across the quote boundary.
# They cannot satisfy clause (i) by construction and are admitted explicitly.
QUOTE_BOUNDARY_RULES = frozenset({"N1.2", "C1"})


# -- rule text --------------------------------------------------------------

_CONSTRAINT_ORDER = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:>|≻)\s*([A-Za-z_]\w*)\s*$")
_CONSTRAINT_PRED = re.compile(r"^\s*([a-z_0-9]+)\s*\(\s*([A-Za-z_]\w*)\s*\)\s*$")


def _classify(lhs_text: str, names: Sequence[str]) -> dict:
    """Variables quoted on the left side are background, the others foreground."""
    probe = {n: Var(n) for n in names}
    lhs = parse_expr(lhs_text, probe)
    inside, _ = _quoted_and_free_vars(lhs)
    return {n: Var(n, background=n in inside) for n in names}


def parse_rule(
    text: str,
    names: Sequence[str],
    rule_id: Optional[str] = None,
    ordering_hint: Optional[str] = None,
    host_arith: bool = False,
) -> ConstrainedRule:
    """Parse ``[id:] lhs -> rhs [| c1, c2]`` with ``names`` as variable names."""
    if rule_id is None:
        rule_id, _, text = text.partition(":")
        rule_id = rule_id.strip()
    body, _, cons = text.partition("|")
    lhs_text, arrow, rhs_text = body.partition("->")
    if not arrow:
        lhs_text, arrow, rhs_text = body.partition("→")
    if not arrow:
        raise ValueError(f"rule {rule_id}: missing '->'")
    variables = _classify(lhs_text, names)
    lhs = parse_expr(lhs_text, variables)
    rhs = parse_expr(rhs_text, variables)
    constraint = []
    for part in filter(None, (p.strip() for p in cons.split(","))):
        m = _CONSTRAINT_ORDER.match(part)
        if m:
            constraint.append(OrderGT(variables[m.group(1)], variables[m.group(2)]))
            continue
        m = _CONSTRAINT_PRED.match(part)
        if m:
            constraint.append(HostPred(m.group(1), variables[m.group(2)]))
            continue
        raise ValueError(f"rule {rule_id}: cannot parse constraint {part!r}")
    return ConstrainedRule(rule_id, lhs, rhs, tuple(constraint), ordering_hint, host_arith)


def load_rule_file(path, name: Optional[str] = None) -> RuleSystem:
    """Read a user rule system.

    Header lines ``vars: x y; bgvars: a b`` declare variable names and
    ``funs: f/1 g/2`` declares extra function symbols.  Every other
    non-blank, non-comment line is ``id: lhs -> rhs [| constraints]``.
    """
    names: list = []
    rules = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(":", 1)[0].strip()
        if head in ("vars", "bgvars", "funs"):
            for chunk in line.split(";"):
                key, _, vals = chunk.partition(":")
                key = key.strip()
                if key in ("vars", "bgvars"):
                    names.extend(vals.split())
                elif key == "funs":
                    for decl in vals.split():
                        sym, _, ar = decl.partition("/")
                        declare_symbol(sym, int(ar or 1))
                elif key:
                    raise ValueError(f"{path}:{lineno}: unknown header {key!r}")
            continue
        try:
            rules.append(parse_rule(line, names))
        except Exception as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return RuleSystem(name or Path(path).stem, tuple(rules), CANON_ORD)


# -- the built-in tables ----------------------------------------------------

_NORM = [
    ("N1.1", "norm([x]) -> [x]"),
    ("N1.2", "norm(x) -> [x] | is_bg_var(x)"),
    ("N1.3", "norm(x) -> [1]*(x^[1]) | is_fg_var(x)"),
    ("N2.1", "norm(sin(n*y)) -> norm(sin_n(n, y)) | is_int_geq0(n)"),
    ("N2.2", "norm(sin(x*y)) -> sin(norm(x*y)) | not_int_geq0(x)"),
    ("N2.3", "norm(sin(x)) -> sin(norm(x)) | not_times_funterm(x)"),
    ("N2.4", "norm(cos(n*y)) -> norm(cos_n(n, y)) | is_int_geq0(n)"),
    ("N2.5", "norm(cos(x*y)) -> cos(norm(x*y)) | not_int_geq0(x)"),
    ("N2.6", "norm(cos(x)) -> cos(norm(x)) | not_times_funterm(x)"),
    ("N3.1", "norm(sin_n(n, x)) -> sin_n(to_succ(n), norm(x))"),
    ("N3.2", "norm(cos_n(n, x)) -> cos_n(to_succ(n), norm(x))"),
    ("N4.1", "norm(x + y) -> norm(x) + norm(y)"),
    ("N4.2", "norm(x*y) -> norm(x)*norm(y)"),
    ("N4.3", "norm(x^y) -> norm(x)^norm(y) | not_int_geq0(y)"),
    ("N5.1", "norm(x^n) -> norm(pwr_n(x, n)) | is_int_geq0(n)"),
    ("N5.2", "norm(pwr_n(x, n)) -> pwr_n(norm(x), to_succ(n))"),
    ("N5.3", "to_succ(0) -> [0]"),
    ("N5.4", "to_succ(n) -> s(to_succ(n - 1)) | gt0(n)"),
    ("N6.1", "norm(x - y) -> norm(x + uminus(y))"),
    ("N6.2", "norm(uminus(x)) -> [-1]*norm(x)"),
    ("N7.1", "norm(x/y) -> norm(x)*(norm(y)^[-1])"),
]

_CANON = [
    ("A1.1", "(x + y) + z -> x + (y + z)"),
    ("A1.2.1", "x + y -> y + x | x > y"),
    ("A1.2.2", "x + (y + z) -> y + (x + z) | x > y"),
    ("A1.3.1", "[0] + x -> x"),
    ("A1.3.2", "[a] + [b] -> [a + b]"),
    ("A1.3.3", "[a] + ([b] + z) -> [a + b] + z"),
    ("A1.3.4", "([a]*x) + ([b]*x) -> [a + b]*x"),
    ("A1.3.5", "([a]*x) + (([b]*x) + z) -> ([a + b]*x) + z"),
    ("A1.4", "(x*y)*z -> x*(y*z)"),
    ("A1.5.1", "x*y -> y*x | x > y"),
    ("A1.5.2", "x*(y*z) -> y*(x*z) | x > y"),
    ("A1.6.1", "[0]*x -> [0]"),
    ("A1.6.2", "[a]*[b] -> [a*b]"),
    ("A1.6.3", "[a]*([b]*z) -> [a*b]*z"),
    ("A1.7.1", "x*(y + z) -> (x*y) + (x*z)"),
    ("A1.7.2", "(y + z)*x -> (y*x) + (z*x)"),
    ("A1.8.1", "(x^y)^z -> x^(y*z)"),
    ("A1.8.2", "(x^y)*(x^z) -> x^(y + z)"),
    ("A1.8.3", "(x^y)*((x^z)*v) -> (x^(y + z))*v"),
    ("A1.9.1", "[a]^[b] -> [a^b]"),
    ("A1.9.2", "pwr_n(x, [0]) -> [1]"),
    ("A1.9.3", "pwr_n(x, s(n)) -> x*pwr_n(x, n)"),
    ("A1.9.4", "(x + y)^[1] -> x + y"),
    ("A1.9.5", "(x*y)^[a] -> (x^[a])*(y^[a])"),
    ("A1.9.6", "x^[0] -> [1]"),
    ("T1.1", "sin([-1]*x) -> [-1]*sin(x)"),
    ("T1.2", "cos([-1]*x) -> cos(x)"),
    ("T1.3", "sin(x1 + x2) -> sin(x1)*cos(x2) + cos(x1)*sin(x2)"),
    ("T1.4", "cos(x1 + x2) -> cos(x1)*cos(x2) + [-1]*(sin(x1)*sin(x2))"),
    ("T1.5", "cos_n(s(s(n)), x) -> [2]*(cos(x)*cos_n(s(n), x)) + ([-1]*cos_n(n, x))"),
    ("T1.6", "sin_n(s(s(n)), x) -> [2]*(cos(x)*sin_n(s(n), x)) + ([-1]*sin_n(n, x))"),
    ("T1.7", "sin(x)^[2] -> [1] + [-1]*(cos(x)^[2])"),
    ("T2.1", "cos_n(s([0]), x) -> cos([1]*x)"),
    ("T2.2", "cos_n([0], x) -> cos([0])"),
    ("T2.3", "sin_n(s([0]), x) -> sin([1]*x)"),
    ("T2.4", "sin_n([0], x) -> sin([0])"),
    ("T2.5", "sin([x]) -> [sin(x)]"),
    ("T2.6", "cos([x]) -> [cos(x)]"),
]

_SIMP = [
    ("S1", "([a]*x) + ([b]*y) -> ([b]*y) + ([a]*x) | x > y"),
    ("S2", "([a]*x) + (([b]*y) + z) -> ([b]*y) + (([a]*x) + z) | x > y"),
    ("S3", "([a]*x) + ([b]*x) -> [a + b]*x"),
    ("S4", "([a]*x) + (([b]*x) + z) -> ([a + b]*x) + z"),
]

_CLEAN = [
    ("C1", "[x] -> x"),
    ("C2", "1*x -> x"),
    ("C3", "x^1 -> x"),
]

# Ground trigonometric constants at multiples of pi, in the vocabulary that
# Norm and Canon produce for ``pi`` and ``pi/2``.
_TPRIME = [
    ("TP1", "sin([1]*pi^[1]) -> [0]"),
    ("TP2", "sin([0.5]*pi^[1]) -> [1]"),
    ("TP3", "cos([1]*pi^[1]) -> [-1]"),
    ("TP4", "cos([0.5]*pi^[1]) -> [0]"),
]

_VARS = ["x", "y", "z", "v", "n", "a", "b", "x1", "x2"]
_HINTS = {"T1.7": "Not oriented"}

SYSTEM_NAMES = ("Norm", "Canon", "Simp", "Clean", "TPrime")
EXPECTED_COUNTS = {"Norm": 21, "Canon": 38, "Simp": 4, "Clean": 3, "TPrime": 4}


def _build(rows, name, ordering) -> RuleSystem:
    rules = []
    for rid, text in rows:
        text = text.replace("norm(", "normalize(")
        rules.append(
            parse_rule(text, _VARS, rule_id=rid, ordering_hint=_HINTS.get(rid), host_arith=rid == "N5.4")
        )
    return RuleSystem(name, tuple(rules), ordering)


_CACHE: dict = {}


def builtin_system(name: str) -> RuleSystem:
    """One of ``Norm``, ``Canon``, ``Simp``, ``Clean`` or ``TPrime``."""
    if name in _CACHE:
        return _CACHE[name]
    table = {
        "Norm": (_NORM, None),
        "Canon": (_CANON, CANON_ORD),
        "Simp": (_SIMP, SIMP_ORD),
        "Clean": (_CLEAN, None),
        "TPrime": (_TPRIME, CANON_ORD),
    }
    if name not in table:
        raise KeyError(f"unknown rule system {name!r}; expected one of {', '.join(SYSTEM_NAMES)}")
    rows, ordering = table[name]
    if name == "TPrime":
        log.info("TPrime uses cos(pi) -> -1")
    system = _build(rows, name, ordering)
    _CACHE[name] = system
    return system


# -- numeric soundness ------------------------------------------------------


@dataclass
class FuzzReport:
    ok: bool
    trials: int
    counterexample: Optional[dict] = None
    lhs_value: Optional[float] = None
    rhs_value: Optional[float] = None
    skipped: int = 0

    def __bool__(self):
        return self.ok


def _integer_vars(t: Term) -> set:
    """Variables sitting where the rule language expects a natural number."""
    out = set()
    for u in iter_subterms(t):
        if type(u) is App:
            if u.fun in ("sin_n", "cos_n", "to_succ", "s"):
                out |= vars_of(u.args[0])
            elif u.fun == "pwr_n":
                out |= vars_of(u.args[1])
    return out


def _sample_value(v: Var, rule: ConstrainedRule, ints: set, rng: random.Random) -> float:
    preds = {c.name for c in rule.host_constraints if c.subject == v}
    if "is_int_geq0" in preds or v in ints:
        return float(rng.randint(0, 5))
    if "gt0" in preds:
        return float(rng.randint(1, 6))
    if "not_int_geq0" in preds:
        return rng.choice([-1, 1]) * rng.uniform(0.1, 3.0) + 0.5
    if v.background:
        val = Fraction(rng.randint(-100, 100), rng.randint(1, 10))
        return float(val) if val else 1.0
    return rng.uniform(0.1, 3.0)


def soundness_fuzz(rule: ConstrainedRule, trials: int = 1000, seed: int = 0, params: Optional[dict] = None) -> FuzzReport:
    """Evaluate both sides of ``rule`` on random instances and compare."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = random.Random(seed)
    variables = sorted(vars_of(rule.lhs), key=lambda v: (v.name, v.background))
    ints = _integer_vars(rule.lhs) | _integer_vars(rule.rhs)
    names = sorted({p.name for p in params_of(rule.lhs) | params_of(rule.rhs)})
    done = skipped = 0
    attempts = 0
    while done < trials and attempts < trials * 20:
        attempts += 1
        assignment = {v: _sample_value(v, rule, ints, rng) for v in variables}
        pvals = dict(params or {})
        for n in names:
            if n not in pvals:
                pvals[n] = math.pi if n == "pi" else rng.uniform(0.1, 10.0)
        try:
            lv = evaluate(rule.lhs, pvals, assignment)
            rv = evaluate(rule.rhs, pvals, assignment)
        except DomainError:
            skipped += 1
            continue
        done += 1
        if not close(lv, rv):
            return FuzzReport(False, done, {v.name: x for v, x in assignment.items()}, lv, rv, skipped)
    return FuzzReport(True, done, skipped=skipped)
