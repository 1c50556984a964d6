"""Orientedness of constrained rules and the well-behavedness check.

A rule ``l -> r | C`` is oriented when every instance satisfying ``C``
strictly decreases.  Ordering constraints ``x > y`` are handled by
enumerating the total orders of the constrained variables consistent with
``C`` and comparing ``l`` and ``r`` with those variables as ordered
constants.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .awpo import CANON_ORD, Evidence, Ord, OrderingContext, compare
from .canonizer import DomainError, deep_simp
from .matching import match
from .rules import ConstrainedRule, OrderGT, RuleSystem
from .terms import App, Num, Param, Quote, Term, Var, apply_subst, iter_subterms, positions_of, subterm_at, vars_of
from .weights import UNKNOWN, obligation_smt2, prove_dominance, weight_of

ORIENTED_STRICT = "oriented_strict_weight"
ORIENTED_LPO = "oriented_weight_eq_lpo"
ORIENTED_GROUND_TOTAL = "oriented_ground_total_only"
WAIVED = "waived_manual"
NOT_ORIENTED = "not_oriented"
UNKNOWN_VERDICT = "unknown"

ORIENTED = (ORIENTED_STRICT, ORIENTED_LPO, ORIENTED_GROUND_TOTAL, WAIVED)

MAX_CONSTRAINED_VARS = 5

# Rules whose strict weight obligation is true but beyond the internal
# prover; each entry records the hand proof.
MANUAL_WAIVERS: dict = {}


class CaseExplosion(RuntimeError):
    pass


@dataclass
class OrientednessReport:
    rule_id: str
    verdict: str
    obligation: tuple
    solver_used: str = "internal"
    evidence: list = field(default_factory=list)
    note: str = ""

    @property
    def oriented(self) -> bool:
        return self.verdict in ORIENTED


@dataclass
class WellBehavednessReport:
    rule_id: str
    clause_a: bool
    oriented_ground_total: bool
    clause_b1: bool
    clause_b2: bool

    @property
    def well_behaved(self) -> bool:
        return self.clause_a or (self.oriented_ground_total and self.clause_b1 and self.clause_b2)


def _base_ctx(system: Optional[RuleSystem]) -> OrderingContext:
    if system is not None and system.ordering is not None:
        return system.ordering
    return CANON_ORD


def constraint_orders(rule: ConstrainedRule):
    """Total orders of the constrained variables consistent with the rule's constraints."""
    pairs = [(c.x, c.y) for c in rule.order_constraints]
    vs = sorted({v for p in pairs for v in p}, key=lambda v: v.name)
    if len(vs) > MAX_CONSTRAINED_VARS:
        raise CaseExplosion(f"{rule.id}: {len(vs)} constrained variables")
    if not vs:
        return [()]
    out = []
    for perm in itertools.permutations(vs):
        rank = {v: i for i, v in enumerate(perm)}
        if all(rank[x] < rank[y] for x, y in pairs):
            out.append(perm)
    return out


def _orient(rule: ConstrainedRule, ctx: OrderingContext):
    evidence = []
    orders = constraint_orders(rule)
    if not orders:
        # unsatisfiable constraints: the rule never fires
        return ORIENTED_STRICT, ["constraints unsatisfiable"]
    for X in orders:
        res = compare(rule.lhs, rule.rhs, ctx.with_(X=X))
        if res.result is not Ord.GT:
            return None, evidence
        evidence.append(res.evidence)
    if all(e is Evidence.BY_WEIGHT_STRICT for e in evidence):
        return ORIENTED_STRICT, evidence
    return ORIENTED_LPO, evidence


def check_oriented(
    rule: ConstrainedRule,
    system: Optional[RuleSystem] = None,
    ctx: Optional[OrderingContext] = None,
    waivers: Optional[dict] = None,
) -> OrientednessReport:
    """Decide orientedness of ``rule`` with respect to its ordinary instances."""
    ctx = ctx or _base_ctx(system)
    waivers = MANUAL_WAIVERS if waivers is None else waivers
    obligation = (weight_of(rule.lhs), weight_of(rule.rhs))
    solver = "external" if ctx.solver_cmd else "internal"
    verdict, evidence = _orient(rule, ctx)
    if verdict is not None:
        return OrientednessReport(rule.id, verdict, obligation, solver, evidence)
    if rule.id in waivers:
        return OrientednessReport(rule.id, WAIVED, obligation, "none", [], waivers[rule.id])
    gt_verdict, _ = _orient(rule, ctx.with_(ground_total=True))
    if gt_verdict is not None:
        return OrientednessReport(rule.id, ORIENTED_GROUND_TOTAL, obligation, solver, [])
    # distinguish a refuted weight obligation from an undecided one
    strict = prove_dominance(*_ground_weights(obligation), True, (), solver_cmd=ctx.solver_cmd)
    weak = prove_dominance(*_ground_weights(obligation), False, (), solver_cmd=ctx.solver_cmd)
    if strict == UNKNOWN and weak == UNKNOWN:
        return OrientednessReport(rule.id, UNKNOWN_VERDICT, obligation, solver, [])
    note = "weight obligation refuted" if weak == "disproved" else "path ordering layer fails"
    return OrientednessReport(rule.id, NOT_ORIENTED, obligation, solver, [], note)


def _ground_weights(obligation):
    """Background variables stand for numbers, whose quotes weigh 1."""
    a, b = obligation
    sub = {v: Num(1) for v in vars_of(a) | vars_of(b) if v.background}
    return apply_subst(a, sub), apply_subst(b, sub)


# -- well-behavedness -------------------------------------------------------


def _quote_positions(t: Term, quoted_vars: set) -> set:
    out = set()
    for p in positions_of(t):
        u = subterm_at(t, p)
        if type(u) is Quote or (type(u) is Var and u in quoted_vars):
            # positions below a quote are not separate quote occurrences
            if not any(p[: k] in out for k in range(len(p))):
                out.add(p)
    return out


def clause_b1(rule: ConstrainedRule) -> bool:
    """Every quoted term on the right also occurs on the left."""
    left = {u for u in iter_subterms(rule.lhs) if type(u) is Quote}
    return all(u in left for u in iter_subterms(rule.rhs) if type(u) is Quote)


def clause_b2(rule: ConstrainedRule) -> bool:
    """Quote positions agree on both sides when the constrained variables are quotes."""
    constrained = {v for c in rule.order_constraints for v in (c.x, c.y)}
    return _quote_positions(rule.lhs, constrained) == _quote_positions(rule.rhs, constrained)


def check_well_behaved(
    rule: ConstrainedRule,
    system: Optional[RuleSystem] = None,
    ctx: Optional[OrderingContext] = None,
) -> WellBehavednessReport:
    ctx = ctx or _base_ctx(system)
    a = _orient(rule, ctx.with_(ground_total=False))[0] is not None
    t = a or _orient(rule, ctx.with_(ground_total=True))[0] is not None
    return WellBehavednessReport(rule.id, a, t, clause_b1(rule), clause_b2(rule))


# -- ground spot checks -----------------------------------------------------

_PARAMS = ("a", "b", "c")


def random_ground_term(rng: random.Random, depth: int = 3) -> Term:
    """A ground term in the vocabulary that Norm hands to Canon."""
    if depth <= 0 or rng.random() < 0.3:
        k = rng.random()
        if k < 0.4:
            return Quote(Num(Fraction(rng.randint(-3, 6), rng.choice((1, 1, 2)))))
        if k < 0.7:
            return App("^", (Param(rng.choice(_PARAMS)), Quote(Num(rng.randint(1, 3)))))
        return Param(rng.choice(_PARAMS))
    op = rng.choice(("+", "*", "*", "^", "sin", "cos"))
    if op in ("sin", "cos"):
        return App(op, (random_ground_term(rng, depth - 1),))
    if op == "^":
        return App("^", (random_ground_term(rng, depth - 1), Quote(Num(rng.randint(-1, 3)))))
    return App(op, (random_ground_term(rng, depth - 1), random_ground_term(rng, depth - 1)))


def _nat_term(rng: random.Random) -> Term:
    t: Term = Quote(Num(0))
    for _ in range(rng.randint(0, 3)):
        t = App("s", (t,))
    return t


def _natural_vars(t: Term) -> set:
    out = set()
    for u in iter_subterms(t):
        if type(u) is App and u.fun in ("sin_n", "cos_n"):
            out |= vars_of(u.args[0])
        elif type(u) is App and u.fun == "pwr_n":
            out |= vars_of(u.args[1])
        elif type(u) is App and u.fun == "s":
            out |= vars_of(u.args[0])
    return out


def ground_spot_check(
    rule: ConstrainedRule,
    system: Optional[RuleSystem] = None,
    trials: int = 200,
    seed: int = 0,
) -> tuple:
    """Compare random ground ordinary instances; returns ``(ok, counterexample)``."""
    ctx = _base_ctx(system).with_(ground_total=True, X=())
    rng = random.Random(seed)
    nat = _natural_vars(rule.lhs)
    variables = sorted(vars_of(rule.lhs), key=lambda v: (v.name, v.background))
    done = attempts = 0
    while done < trials and attempts < trials * 50:
        attempts += 1
        sigma = {}
        for v in variables:
            if v.background:
                sigma[v] = Num(Fraction(rng.randint(-6, 6), rng.choice((1, 2))))
            elif v in nat:
                sigma[v] = _nat_term(rng)
            else:
                sigma[v] = random_ground_term(rng, 2)
        inst_l = apply_subst(rule.lhs, sigma)
        if match(rule.lhs, inst_l) is None:
            continue
        if any(
            compare(apply_subst(c.x, sigma), apply_subst(c.y, sigma), ctx).result is not Ord.GT
            for c in rule.order_constraints
        ):
            continue
        try:
            inst_r = deep_simp(apply_subst(rule.rhs, sigma))
        except DomainError:
            continue
        done += 1
        if compare(inst_l, inst_r, ctx).result is not Ord.GT:
            return False, (inst_l, inst_r)
    return True, None


# -- system analysis --------------------------------------------------------


@dataclass
class SystemAnalysis:
    system: str
    orientedness: list
    well_behavedness: list
    spot_checks: dict
    excluded: tuple = ()

    @property
    def certified(self) -> bool:
        # ground-total orientation only transfers to the real ordering for well-behaved rules
        return (
            all(r.oriented for r in self.orientedness if r.rule_id not in self.excluded)
            and all(w.well_behaved for w in self.well_behavedness if w.rule_id not in self.excluded)
            and all(self.spot_checks.values())
        )

    @property
    def waived(self) -> list:
        return [r.rule_id for r in self.orientedness if r.verdict == WAIVED]

    def summary(self) -> str:
        considered = [r for r in self.orientedness if r.rule_id not in self.excluded]
        n_or = sum(r.oriented for r in considered)
        n_wb = sum(w.well_behaved for w in self.well_behavedness if w.rule_id not in self.excluded)
        status = "certified terminating" if self.certified else "not certified"
        extra = f" (excluded: {', '.join(self.excluded)})" if self.excluded else ""
        if self.waived:
            extra += f" (waived: {', '.join(self.waived)})"
        return (
            f"{self.system}: {n_or}/{len(considered)} oriented, "
            f"{n_wb}/{len(considered)} well-behaved, {status}{extra}"
        )

    def to_dict(self) -> dict:
        from .printer import to_text

        return {
            "system": self.system,
            "certified": self.certified,
            "excluded": list(self.excluded),
            "rules": [
                {
                    "id": o.rule_id,
                    "verdict": o.verdict,
                    "obligation": [to_text(o.obligation[0]), to_text(o.obligation[1])],
                    "solver": o.solver_used,
                    "note": o.note,
                    "well_behaved": w.well_behaved,
                    "clause_a": w.clause_a,
                    "clause_b1": w.clause_b1,
                    "clause_b2": w.clause_b2,
                    "spot_check": self.spot_checks.get(o.rule_id),
                }
                for o, w in zip(self.orientedness, self.well_behavedness)
            ],
        }


def analyze_system(
    system: RuleSystem,
    ctx: Optional[OrderingContext] = None,
    spot_trials: int = 200,
    waivers: Optional[dict] = None,
) -> SystemAnalysis:
    """Orientedness and well-behavedness of every rule, plus ground spot checks.

    Rules carrying a "Not oriented" hint are reported but excluded from
    certification.
    """
    reports, wb, spots = [], [], {}
    for rule in system.rules:
        rep = check_oriented(rule, system, ctx, waivers)
        reports.append(rep)
        wb.append(check_well_behaved(rule, system, ctx))
        if rep.oriented and spot_trials:
            spots[rule.id] = ground_spot_check(rule, system, spot_trials)[0]
    excluded = tuple(r.id for r in system.rules if r.ordering_hint == "Not oriented")
    return SystemAnalysis(system.name, reports, wb, spots, excluded)


def emit_obligations(analysis: SystemAnalysis, directory) -> list:
    """Write one SMT-LIB2 file per rule whose weight obligation is undischarged."""
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for rep in analysis.orientedness:
        if rep.oriented:
            continue
        a, b = _ground_weights(rep.obligation)
        path = out_dir / f"{rep.rule_id}.smt2"
        path.write_text(obligation_smt2(a, b, strict=True))
        written.append(path)
    return written
