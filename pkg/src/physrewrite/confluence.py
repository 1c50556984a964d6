"""Critical triples and their case-split joinability test.

Each critical triple is examined once per *case*: an identification of its
foreground variables (a set partition), a total order on the resulting
classes, and a choice per class between "stands for a quoted number" and
"stands for an unquoted term".  A case whose ordering facts contradict the
triple's constraints is skipped; otherwise both sides are normalized with
the case's variables as ordered constants and compared.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .awpo import IS_QUOTE, NOT_QUOTE, Ord, OrderingContext, compare
from .canonizer import DomainError, deep_simp
from .engine import BudgetExhausted, normal_form
from .matching import unify
from .rules import ConstrainedRule, OrderGT, RuleSystem
from .terms import (
    App,
    Num,
    Quote,
    Term,
    Var,
    apply_subst,
    positions_of,
    rename,
    replace_at,
    subterm_at,
    vars_of,
)
from .termination import random_ground_term

JOIN_BUDGET = 20_000
MAX_VARS = 5


class CaseExplosion(RuntimeError):
    pass


@dataclass(frozen=True)
class CriticalTriple:
    left: Term
    right: Term
    constr: tuple  # pairs (s, t) meaning s > t
    overlap: tuple  # (outer rule id, inner rule id, position)

    @property
    def foreground_vars(self) -> list:
        vs = set(vars_of(self.left)) | set(vars_of(self.right))
        for s, t in self.constr:
            vs |= vars_of(s) | vars_of(t)
        return sorted((v for v in vs if not v.background), key=lambda v: v.name)


@dataclass(frozen=True)
class CaseAssignment:
    partition: tuple  # classes: tuples of variables
    order: tuple  # class indices, greatest first
    quote_split: tuple  # per class: True when the class stands for a quote

    def describe(self) -> str:
        parts = []
        for rank, idx in enumerate(self.order):
            cls = "=".join(v.name for v in self.partition[idx])
            parts.append(f"[{cls}]" if self.quote_split[idx] else cls)
        return " > ".join(parts)


@dataclass
class JoinResult:
    status: str  # joined | not_joined | skipped_unsat
    left_nf: Optional[Term] = None
    right_nf: Optional[Term] = None
    budget_exhausted: bool = False


# -- overlaps ---------------------------------------------------------------


def _rule_constraints(rule: ConstrainedRule, sigma: dict) -> list:
    return [(apply_subst(c.x, sigma), apply_subst(c.y, sigma)) for c in rule.order_constraints]


def critical_triples(sys1: RuleSystem, sys2: Optional[RuleSystem] = None) -> list:
    """Overlaps of left sides of ``sys2`` rules into non-variable positions of ``sys1`` rules."""
    sys2 = sys1 if sys2 is None else sys2
    out = []
    for r1 in sys1.rules:
        l1, rr1 = rename(r1.lhs, "_1"), rename(r1.rhs, "_1")
        ren1 = {v: Var(v.name + "_1", v.background) for v in vars_of(r1.lhs)}
        for r2 in sys2.rules:
            l2, rr2 = rename(r2.lhs, "_2"), rename(r2.rhs, "_2")
            ren2 = {v: Var(v.name + "_2", v.background) for v in vars_of(r2.lhs)}
            for pos in positions_of(l1):
                sub = subterm_at(l1, pos)
                if type(sub) is Var:
                    continue
                if not pos and r1 is r2:
                    continue
                sigma = unify(sub, l2)
                if sigma is None:
                    continue
                try:
                    inner = deep_simp(apply_subst(rr2, sigma))
                    left = deep_simp(replace_at(apply_subst(l1, sigma), pos, inner))
                    right = deep_simp(apply_subst(rr1, sigma))
                except DomainError:
                    continue
                constr = []
                for rule, ren in ((r1, ren1), (r2, ren2)):
                    for c in rule.order_constraints:
                        constr.append(
                            (apply_subst(ren[c.x], sigma), apply_subst(ren[c.y], sigma))
                        )
                out.append(CriticalTriple(left, right, tuple(constr), (r1.id, r2.id, pos)))
    return out


# -- cases ------------------------------------------------------------------


def set_partitions(items: list) -> Iterator[list]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def enumerate_cases(variables: list) -> Iterator[CaseAssignment]:
    """Every partition x total order x quote split of ``variables``."""
    if len(variables) > MAX_VARS:
        raise CaseExplosion(f"{len(variables)} variables exceed the bound of {MAX_VARS}")
    for part in set_partitions(list(variables)):
        classes = tuple(tuple(c) for c in part)
        k = len(classes)
        for order in itertools.permutations(range(k)):
            for split in itertools.product((False, True), repeat=k):
                yield CaseAssignment(classes, order, split)


def case_count(n: int) -> int:
    """Closed form of the number of cases for ``n`` variables."""
    from math import comb, factorial

    def stirling2(n, k):
        return sum((-1) ** i * comb(k, i) * (k - i) ** n for i in range(k + 1)) // factorial(k)

    if n == 0:
        return 1
    return sum(stirling2(n, k) * factorial(k) * 2**k for k in range(1, n + 1))


def _case_substitution(case: CaseAssignment):
    theta, X, qcase = {}, [], {}
    for idx in case.order:
        cls = case.partition[idx]
        rep = cls[0]
        if case.quote_split[idx]:
            qv = Var(rep.name + "_q", background=True)
            target: Term = Quote(qv)
            X.append(qv)
        else:
            target = rep
            X.append(rep)
            qcase[rep] = NOT_QUOTE
        for v in cls:
            if target != v:
                theta[v] = target
    return theta, tuple(X), qcase


def _case_consistent(case: CaseAssignment) -> bool:
    # unquoted terms dominate quoted ones, so no quote class may rank above an unquoted class
    seen_quote = False
    for idx in case.order:
        if case.quote_split[idx]:
            seen_quote = True
        elif seen_quote:
            return False
    return True


def constraint_satisfiable(constr: Iterable, ctx: OrderingContext) -> bool:
    """``{s1 > t1, ...}`` is satisfiable iff no ``ti >= si`` holds."""
    for s, t in constr:
        if s == t:
            return False
        if compare(t, s, ctx).result in (Ord.GT, Ord.EQ):
            return False
    return True


def case_context(case: CaseAssignment, base: OrderingContext) -> OrderingContext:
    _, X, qcase = _case_substitution(case)
    return base.with_(X=X, quote_case=qcase, ground_total=True)


def join_case(
    triple: CriticalTriple,
    case: CaseAssignment,
    system: RuleSystem,
    budget: int = JOIN_BUDGET,
) -> JoinResult:
    base = system.ordering or OrderingContext()
    if not _case_consistent(case):
        return JoinResult("skipped_unsat")
    theta, X, qcase = _case_substitution(case)
    ctx = base.with_(X=X, quote_case=qcase, ground_total=True)
    constr = [(apply_subst(s, theta), apply_subst(t, theta)) for s, t in triple.constr]
    try:
        constr = [(deep_simp(s), deep_simp(t)) for s, t in constr]
        left = deep_simp(apply_subst(triple.left, theta))
        right = deep_simp(apply_subst(triple.right, theta))
    except DomainError:
        return JoinResult("skipped_unsat")
    if not constraint_satisfiable(constr, ctx):
        return JoinResult("skipped_unsat")
    if left == right:
        return JoinResult("joined", left, right)
    try:
        nl = normal_form(left, system, ctx, budget=budget)
        nr = normal_form(right, system, ctx, budget=budget)
    except BudgetExhausted:
        return JoinResult("not_joined", left, right, budget_exhausted=True)
    return JoinResult("joined" if nl == nr else "not_joined", nl, nr)


# -- ground cross-validation ------------------------------------------------


def _ground_values(case: CaseAssignment, rng: random.Random, ctx: OrderingContext):
    """Ground values for each class, consistent with the case order, or None."""
    quote_idx = [i for i in case.order if case.quote_split[i]]
    plain_idx = [i for i in case.order if not case.quote_split[i]]
    nums = sorted({Fraction(rng.randint(-9, 9), rng.choice((1, 2))) for _ in range(len(quote_idx) * 3)}, reverse=True)
    if len(nums) < len(quote_idx):
        return None
    chosen = sorted(rng.sample(nums, len(quote_idx)), reverse=True)
    values = {i: Quote(Num(n)) for i, n in zip(quote_idx, chosen)}
    terms = []
    while len(terms) < len(plain_idx):
        t = random_ground_term(rng, 2)
        if type(t) is not Quote and t not in terms:
            terms.append(t)
    # order the unquoted candidates decreasingly; give up on incomparable pairs
    for a, b in itertools.combinations(terms, 2):
        if compare(a, b, ctx).result not in (Ord.GT, Ord.LT):
            return None
    terms.sort(key=_SortKey(ctx))
    values.update(zip(plain_idx, terms))
    return values


class _SortKey:
    def __init__(self, ctx):
        self.ctx = ctx

    def __call__(self, t):
        return _Keyed(t, self.ctx)


class _Keyed:
    def __init__(self, t, ctx):
        self.t, self.ctx = t, ctx

    def __lt__(self, other):
        return compare(self.t, other.t, self.ctx).result is Ord.GT


def cross_validate(
    triple: CriticalTriple,
    case: CaseAssignment,
    system: RuleSystem,
    trials: int = 100,
    seed: int = 0,
) -> tuple:
    """Check random ground instances of a joined case; ``(ok, witness)``."""
    ctx = (system.ordering or OrderingContext()).with_(ground_total=True, X=(), quote_case=())
    rng = random.Random(seed)
    bgs = sorted({v for v in vars_of(triple.left) | vars_of(triple.right) if v.background}, key=lambda v: v.name)
    for s, t in triple.constr:
        bgs += [v for v in vars_of(s) | vars_of(t) if v.background and v not in bgs]
    done = attempts = 0
    while done < trials and attempts < trials * 20:
        attempts += 1
        values = _ground_values(case, rng, ctx)
        if values is None:
            continue
        sigma = {}
        for idx, cls in enumerate(case.partition):
            for v in cls:
                sigma[v] = values[idx]
        for v in bgs:
            sigma[v] = Num(Fraction(rng.randint(-9, 9), rng.choice((1, 2))))
        try:
            cons = [(deep_simp(apply_subst(s, sigma)), deep_simp(apply_subst(t, sigma))) for s, t in triple.constr]
            if any(compare(s, t, ctx).result is not Ord.GT for s, t in cons):
                continue
            left = deep_simp(apply_subst(triple.left, sigma))
            right = deep_simp(apply_subst(triple.right, sigma))
            nl = normal_form(left, system, ctx, budget=JOIN_BUDGET)
            nr = normal_form(right, system, ctx, budget=JOIN_BUDGET)
        except (DomainError, BudgetExhausted):
            continue
        done += 1
        if nl != nr:
            return False, (left, right, nl, nr)
    return True, None


# -- whole-system analysis --------------------------------------------------


@dataclass
class TripleReport:
    triple: CriticalTriple
    joined: int = 0
    not_joined: int = 0
    skipped: int = 0
    witnesses: list = field(default_factory=list)  # (case, JoinResult)
    joined_cases: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.not_joined == 0


@dataclass
class ConfluenceReport:
    system: str
    triples: list

    @property
    def joined(self) -> int:
        return sum(t.joined for t in self.triples)

    @property
    def not_joined(self) -> int:
        return sum(t.not_joined for t in self.triples)

    @property
    def skipped(self) -> int:
        return sum(t.skipped for t in self.triples)

    @property
    def cases(self) -> int:
        return self.joined + self.not_joined + self.skipped

    def summary(self) -> str:
        bad = sum(not t.ok for t in self.triples)
        return (
            f"{self.system}: {len(self.triples)} critical triples, {self.cases} cases: "
            f"{self.joined} joined, {self.not_joined} not joined, {self.skipped} skipped; "
            f"{bad} triples with unjoined cases"
        )

    def to_dict(self) -> dict:
        from .printer import to_text

        return {
            "system": self.system,
            "triples": len(self.triples),
            "joined": self.joined,
            "not_joined": self.not_joined,
            "skipped_unsat": self.skipped,
            "unjoined": [
                {
                    "overlap": [t.triple.overlap[0], t.triple.overlap[1], list(t.triple.overlap[2])],
                    "left": to_text(t.triple.left),
                    "right": to_text(t.triple.right),
                    "case": case.describe(),
                    "left_nf": to_text(res.left_nf),
                    "right_nf": to_text(res.right_nf),
                    "budget_exhausted": res.budget_exhausted,
                }
                for t in self.triples
                for case, res in t.witnesses
            ],
        }


def analyze_triple(triple: CriticalTriple, system: RuleSystem, keep_witnesses: int = 3) -> TripleReport:
    rep = TripleReport(triple)
    memo: dict = {}
    for case in enumerate_cases(triple.foreground_vars):
        theta, X, qcase = _case_substitution(case)
        key = (_case_consistent(case), tuple(sorted(theta.items(), key=lambda kv: kv[0].name)), X)
        res = memo.get(key)
        if res is None:
            res = join_case(triple, case, system)
            memo[key] = res
        if res.status == "joined":
            rep.joined += 1
            rep.joined_cases.append(case)
        elif res.status == "skipped_unsat":
            rep.skipped += 1
        else:
            rep.not_joined += 1
            if len(rep.witnesses) < keep_witnesses:
                rep.witnesses.append((case, res))
    return rep


def analyze_confluence(system: RuleSystem, other: Optional[RuleSystem] = None) -> ConfluenceReport:
    """Classify every case of every critical triple of ``system``."""
    triples = critical_triples(system, other)
    joint = system if other is None or other is system else system.extended(other.rules)
    reports = [analyze_triple(t, joint) for t in triples]
    reports.sort(key=lambda r: (r.triple.overlap[0], r.triple.overlap[1], r.triple.overlap[2]))
    return ConfluenceReport(system.name, reports)


def peak_reducts(t: Term, system: RuleSystem) -> list:
    """Normal forms reached from each one-step reduct of a ground term."""
    from .engine import redexes

    out = []
    for pos, rid, contractum in redexes(t, system):
        nxt = replace_at(t, pos, contractum)
        out.append((rid, pos, normal_form(nxt, system)))
    return out
