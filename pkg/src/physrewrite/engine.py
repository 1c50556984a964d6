"""Rewriting with simplification, normal forms, and the chained ARI pipeline."""

from __future__ import annotations

import random
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .awpo import Ord, OrderingContext, compare
from .canonizer import DomainError, deep_simp, simp
from .matching import match
from .rules import ConstrainedRule, HostPred, OrderGT, RuleSystem, builtin_system
from .terms import (
    App,
    NaN,
    NaNTerm,
    Num,
    Param,
    Quote,
    Term,
    Var,
    apply_subst,
    positions_of,
    replace_at,
    subterm_at,
    with_children,
)

DEFAULT_BUDGET = 100_000


class BudgetExhausted(RuntimeError):
    """Raised when normalization exceeds its step budget."""


_STEP_SINK: ContextVar = ContextVar("step_sink", default=None)


@contextmanager
def counting_steps():
    """Collect the number of rewrite steps taken inside the block.

    Yields a one-element list whose entry grows as normal forms are computed.
    """
    sink = [0]
    token = _STEP_SINK.set(sink)
    try:
        yield sink
    finally:
        _STEP_SINK.reset(token)


def _record_steps(n: int) -> None:
    sink = _STEP_SINK.get()
    if sink is not None:
        sink[0] += n


@dataclass
class RewriteTrace:
    input: Term
    output: Term = None
    steps: list = field(default_factory=list)

    def lines(self):
        from .printer import to_text

        for i, (rid, pos, after) in enumerate(self.steps, 1):
            where = ".".join(str(k) for k in pos) or "root"
            yield f"step {i}: {rid} @ {where} => {to_text(after, flat=True)}"

    def replay(self, system_of: Callable[[str], ConstrainedRule]) -> Term:
        """Re-apply each recorded step; returns the final term."""
        t = self.input
        for rid, pos, after in self.steps:
            rule = system_of(rid)
            red = subterm_at(t, pos)
            sigma = match(rule.lhs, red)
            if sigma is None:
                raise ValueError(f"recorded step {rid} does not match at {pos}")
            t = replace_at(t, pos, _contract(rule, sigma))
            if t != after:
                raise ValueError(f"replay of {rid} diverged")
        return t


def _root_key(t: Term) -> str:
    ty = type(t)
    if ty is App:
        return t.fun
    if ty is Quote:
        return "[]"
    if ty is Var:
        return "*"
    return ty.__name__


_INDEX: dict = {}


def _rules_for(system: RuleSystem, key: str):
    idx = _INDEX.get(id(system))
    if idx is None or idx[0] is not system:
        table: dict = {}
        generic = [r for r in system.rules if type(r.lhs) is Var]
        for r in system.rules:
            if type(r.lhs) is not Var:
                table.setdefault(_root_key(r.lhs), []).append(r)
        # keep table order when mixing generic and keyed rules
        order = {r.id: i for i, r in enumerate(system.rules)}
        for k in table:
            table[k] = sorted(table[k] + generic, key=lambda r: order[r.id])
        idx = (system, table, generic)
        _INDEX[id(system)] = idx
    _, table, generic = idx
    return table.get(key, generic)


def _fold_numbers(t: Term) -> Term:
    """Evaluate arithmetic whose leaves are all numbers, outside quotes."""
    if type(t) is not App:
        return t
    kids = [_fold_numbers(a) for a in t.args]
    t = with_children(t, kids)
    if t.fun in ("+", "-", "*", "/", "^", "uminus") and all(type(a) is Num for a in kids):
        out = simp(t)
        if type(out) is Num:
            return out
    return t


def _contract(rule: ConstrainedRule, sigma: dict) -> Term:
    out = apply_subst(rule.rhs, sigma)
    if rule.host_arith:
        out = _fold_numbers(out)
    return deep_simp(out)


def _ground_ctx(system: RuleSystem, ctx: Optional[OrderingContext]) -> OrderingContext:
    if ctx is not None:
        return ctx
    base = system.ordering or OrderingContext()
    return base if base.ground_total else base.with_(ground_total=True)


def constraints_hold(rule: ConstrainedRule, sigma: dict, ctx: OrderingContext) -> bool:
    for c in rule.constraint:
        if isinstance(c, OrderGT):
            if compare(apply_subst(c.x, sigma), apply_subst(c.y, sigma), ctx).result is not Ord.GT:
                return False
        elif isinstance(c, HostPred):
            if not c.holds(apply_subst(c.subject, sigma)):
                return False
    return True


def try_root(t: Term, system: RuleSystem, ctx: OrderingContext):
    """First rule (table order) applicable at the root: ``(contractum, rule_id)``."""
    for rule in _rules_for(system, _root_key(t)):
        sigma = match(rule.lhs, t)
        if sigma is None or not constraints_hold(rule, sigma, ctx):
            continue
        try:
            return _contract(rule, sigma), rule.id
        except DomainError:
            # the quoted arithmetic is undefined here; the rule does not apply
            continue
    return None


def redexes(t: Term, system: RuleSystem, ctx: Optional[OrderingContext] = None):
    """All ``(position, rule_id, contractum)`` triples of ``t``."""
    ctx = _ground_ctx(system, ctx)
    out = []
    for pos in positions_of(t):
        sub = subterm_at(t, pos)
        for rule in _rules_for(system, _root_key(sub)):
            sigma = match(rule.lhs, sub)
            if sigma is None or not constraints_hold(rule, sigma, ctx):
                continue
            try:
                out.append((pos, rule.id, _contract(rule, sigma)))
            except DomainError:
                continue
    return out


def _random_innermost(u: Term, pos: tuple, system: RuleSystem, ctx: OrderingContext, rng: random.Random):
    if type(u) is App:
        order = list(range(len(u.args)))
        rng.shuffle(order)
        for i in order:
            hit = _random_innermost(u.args[i], pos + (i,), system, ctx, rng)
            if hit is not None:
                return hit
    elif type(u) is Quote:
        hit = _random_innermost(u.inner, pos + (0,), system, ctx, rng)
        if hit is not None:
            return hit
    rules = list(_rules_for(system, _root_key(u)))
    rng.shuffle(rules)
    for rule in rules:
        sigma = match(rule.lhs, u)
        if sigma is None or not constraints_hold(rule, sigma, ctx):
            continue
        try:
            return pos, _contract(rule, sigma), rule.id
        except DomainError:
            continue
    return None


def rewrite_step(
    t: Term,
    system: RuleSystem,
    ctx: Optional[OrderingContext] = None,
    rng: Optional[random.Random] = None,
    innermost: bool = False,
):
    """One innermost-leftmost step; ``(term, rule_id, position)`` or None.

    With ``rng`` positions and rules are tried in a random order instead and
    the first applicable pair is taken.  Adding ``innermost`` keeps the random
    choice among redexes that have no redex below them.
    """
    ctx = _ground_ctx(system, ctx)
    if rng is not None and innermost:
        hit = _random_innermost(t, (), system, ctx, rng)
        if hit is None:
            return None
        pos, contractum, rid = hit
        return replace_at(t, pos, contractum), rid, pos
    if rng is not None:
        positions = positions_of(t)
        rng.shuffle(positions)
        for pos in positions:
            sub = subterm_at(t, pos)
            rules = list(_rules_for(system, _root_key(sub)))
            rng.shuffle(rules)
            for rule in rules:
                sigma = match(rule.lhs, sub)
                if sigma is None or not constraints_hold(rule, sigma, ctx):
                    continue
                try:
                    contractum = _contract(rule, sigma)
                except DomainError:
                    continue
                return replace_at(t, pos, contractum), rule.id, pos
        return None

    def go(u: Term, pos: tuple):
        if type(u) is App:
            for i, a in enumerate(u.args):
                hit = go(a, pos + (i,))
                if hit is not None:
                    return hit
        elif type(u) is Quote:
            hit = go(u.inner, pos + (0,))
            if hit is not None:
                return hit
        found = try_root(u, system, ctx)
        if found is None:
            return None
        return pos, found[0], found[1]

    hit = go(t, ())
    if hit is None:
        return None
    pos, contractum, rid = hit
    return replace_at(t, pos, contractum), rid, pos


def normal_form(
    t: Term,
    system: RuleSystem,
    ctx: Optional[OrderingContext] = None,
    budget: int = DEFAULT_BUDGET,
    trace: Optional[RewriteTrace] = None,
    rng: Optional[random.Random] = None,
    innermost: bool = False,
) -> Term:
    """Rewrite ``t`` to an ``system``-normal form.

    Raises :class:`BudgetExhausted` after ``budget`` steps.
    """
    ctx = _ground_ctx(system, ctx)
    if trace is not None or rng is not None:
        steps = 0
        while True:
            res = rewrite_step(t, system, ctx, rng, innermost)
            if res is None:
                _record_steps(steps)
                return t
            steps += 1
            if steps > budget:
                raise BudgetExhausted(f"{system.name}: more than {budget} steps")
            t, rid, pos = res
            if trace is not None:
                trace.steps.append((rid, pos, t))

    memo: dict = {}
    steps = [0]

    def nf(u: Term) -> Term:
        hit = memo.get(u)
        if hit is not None:
            return hit
        cur = u
        while True:
            ty = type(cur)
            if ty is App:
                cur = with_children(cur, [nf(a) for a in cur.args])
            elif ty is Quote:
                inner = nf(cur.inner)
                if inner is not cur.inner:
                    cur = Quote(inner)
            found = try_root(cur, system, ctx)
            if found is None:
                break
            steps[0] += 1
            if steps[0] > budget:
                raise BudgetExhausted(f"{system.name}: more than {budget} steps")
            cur = found[0]
        memo[u] = cur
        return cur

    try:
        return nf(t)
    finally:
        _record_steps(steps[0])


def desugar(t: Term) -> Term:
    """Replace ``sqrt(x)`` by ``x^(1/2)`` ahead of normalization."""
    if type(t) is App:
        kids = [desugar(a) for a in t.args]
        if t.fun == "sqrt":
            return App("^", (kids[0], Num(Fraction(1, 2))))
        return with_children(t, kids)
    return t


def pipeline_systems(tprime: bool = False):
    canon = builtin_system("Canon")
    if tprime:
        canon = canon.extended(builtin_system("TPrime").rules, "Canon+TPrime")
    return [
        builtin_system("Norm"),
        canon,
        builtin_system("Simp"),
        builtin_system("Clean"),
    ]


def ari_stages(t: Term, tprime: bool = False, budget: int = DEFAULT_BUDGET, traces: Optional[dict] = None):
    """Intermediate results after each of Norm, Canon, Simp and Clean."""
    if isinstance(t, NaNTerm):
        return [("input", t)]
    cur = App("normalize", (desugar(t),))
    out = [("input", t)]
    for system in pipeline_systems(tprime):
        tr = None
        if traces is not None:
            tr = RewriteTrace(cur)
            traces[system.name] = tr
        cur = normal_form(cur, system, budget=budget, trace=tr)
        if tr is not None:
            tr.output = cur
        out.append((system.name, cur))
    return out


def ari_normalize(t: Term, tprime: bool = False, budget: int = DEFAULT_BUDGET) -> Term:
    """Chained normal form under Norm, Canon, Simp and Clean."""
    return ari_stages(t, tprime, budget)[-1][1]


def algebraically_equal(s: Term, t: Term, tprime: bool = False, budget: int = DEFAULT_BUDGET) -> bool:
    if isinstance(s, NaNTerm) or isinstance(t, NaNTerm):
        return False
    if s == t:
        return True
    return ari_normalize(s, tprime, budget) == ari_normalize(t, tprime, budget)


def ari_closure(t: Term, tprime: bool = False, budget: int = DEFAULT_BUDGET, rounds: int = 5) -> Term:
    """Repeat ARI normalization until the result is stable.

    One pass can leave monomials in a shape the next pass sorts differently
    (the trig sign rules drop the unit coefficient that Norm introduces), so
    comparing solved expressions uses this fixpoint.
    """
    cur = ari_normalize(t, tprime, budget)
    for _ in range(rounds):
        nxt = ari_normalize(cur, tprime, budget)
        if nxt == cur:
            return cur
        cur = nxt
    return cur
