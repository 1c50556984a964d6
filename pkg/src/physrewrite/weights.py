"""Weight function of the ordering and a sound, incomplete dominance prover.

Weights are arithmetic terms over rule variables built from ``+``, ``*``,
``^`` and natural numbers.  Every weight is monotone in each variable and at
least 1 whenever each variable is at least 1.
"""

from __future__ import annotations

import itertools
import logging
import math
import shutil
import subprocess
import tempfile
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence

import mpmath

from .poly import Poly, poly_to_term
from .terms import App, NaNTerm, Num, Param, Quote, Term, Var, apply_subst, vars_of

log = logging.getLogger(__name__)

ONE = Num(1)
TWO = Num(2)
THREE = Num(3)

PROVED, DISPROVED, UNKNOWN = "proved", "disproved", "unknown"


class SolverUnavailable(RuntimeError):
    pass


def _add(a, b):
    return App("+", (a, b))


def _mul(a, b):
    return App("*", (a, b))


def _pow(a, b):
    return App("^", (a, b))


@lru_cache(maxsize=200_000)
def weight_of(t: Term) -> Term:
    """Symbolic weight of ``t``.

    A quoted variable weighs as the variable itself; every other quoted term
    weighs 1, as do parameters and bare numbers.
    """
    ty = type(t)
    if ty is Var:
        return t
    if ty is Quote:
        return t.inner if type(t.inner) is Var else ONE
    if ty is Param or ty is Num or ty is NaNTerm:
        return ONE
    f = t.fun
    w = [weight_of(a) for a in t.args]
    if f in ("sin_n", "cos_n"):
        n, x = w
        return _pow(_add(_mul(TWO, _pow(TWO, _mul(x, THREE))), ONE), _mul(TWO, n))
    if f == "pwr_n":
        x, n = w
        return _pow(_add(_pow(TWO, n), ONE), x)
    if f == "s":
        return _add(w[0], ONE)
    if f == "^":
        x, y = w
        return _mul(_mul(x, x), _mul(TWO, y))
    if f == "*":
        return _mul(TWO, _mul(w[0], w[1]))
    if f == "+":
        return _add(ONE, _add(w[0], w[1]))
    if f in ("sin", "cos"):
        return _pow(TWO, _mul(w[0], THREE))
    # symbols outside the ordering's core signature: 1 + sum of arguments
    out = ONE
    for x in w:
        out = _add(out, x)
    return out


# -- ground evaluation ------------------------------------------------------

_BIG_BITS = 1 << 15


def _num_pow(b, e):
    if isinstance(b, int) and isinstance(e, int):
        if b <= 1 or e * b.bit_length() < _BIG_BITS:
            return b**e
    return mpmath.power(mpmath.mpf(b), e)


@lru_cache(maxsize=200_000)
def weight_value(w: Term):
    """Evaluate a variable-free weight expression (an int, or an mpf when huge)."""
    ty = type(w)
    if ty is Num:
        return int(w.value)
    if ty is Var:
        raise ValueError("weight is not ground")
    a, b = (weight_value(x) for x in w.args)
    if w.fun == "+":
        return a + b
    if w.fun == "*":
        return a * b
    return _num_pow(a, b)


def ground_weight(t: Term):
    return weight_value(weight_of(t))


# -- symbolic dominance -----------------------------------------------------


def _wpoly(w: Term) -> Optional[Poly]:
    """Polynomial over variables and exponential atoms, or None if unsupported."""
    ty = type(w)
    if ty is Num:
        return Poly.const(w.value)
    if ty is Var:
        return Poly.atom(w)
    a = _wpoly(w.args[0])
    b = _wpoly(w.args[1])
    if a is None or b is None:
        return None
    if w.fun == "+":
        return a + b
    if w.fun == "*":
        return a * b
    # exponentiation: split the exponent into constant and monomial parts
    if b.is_const():
        e = b.const_value()
        if e.denominator != 1 or e < 0:
            return None
        if a.is_const():
            return Poly.const(a.const_value() ** int(e))
        return a ** int(e)
    out = Poly.const(1)
    base_term = poly_to_term(a)
    for m, c in b.terms.items():
        if c.denominator != 1 or c < 0:
            return None
        k = int(c)
        if not m:
            out = out * (Poly.const(a.const_value() ** k) if a.is_const() else a**k)
            continue
        atom = _pow(base_term, poly_to_term(Poly({m: Fraction(1)})))
        out = out * Poly.atom(atom, k)
    return out


def _lower_bound(atom: Term) -> Fraction:
    """Value of a weight atom with every variable at its minimum 1."""
    sub = {v: ONE for v in vars_of(atom)}
    val = weight_value(apply_subst(atom, sub))
    if not isinstance(val, int):
        return Fraction(10) ** 30
    return Fraction(val)


def _chain_subst(variables: Iterable[Var], order: Sequence[Var]):
    """Express each variable as 1 + (sum of fresh nonnegative slack variables)."""
    mapping = {}
    order = [v for v in order]
    acc = Poly.const(1)
    for v in reversed(order):
        acc = acc + Poly.atom(Var(f"_d_{v.name}"))
        mapping[v] = acc
    for v in variables:
        if v not in mapping:
            mapping[v] = Poly.const(1) + Poly.atom(Var(f"_d_{v.name}"))
    return mapping


def _substitute(p: Poly, mapping: dict) -> Poly:
    out = Poly()
    for m, c in p.terms.items():
        term = Poly.const(c)
        for a, e in m:
            term = term * (mapping[a] ** e if a in mapping else Poly.atom(a, e))
        out = out + term
    return out


def _sample_points(variables: Sequence[Var], order: Sequence[Var]):
    values = (1, 2, 3, 5)
    vs = list(variables)
    if len(vs) > 6:
        vs_points = [dict.fromkeys(vs, 1), dict.fromkeys(vs, 2)]
        yield from vs_points
        return
    rank = {v: i for i, v in enumerate(order)}
    for combo in itertools.product(values, repeat=len(vs)):
        pt = dict(zip(vs, combo))
        ok = all(
            pt[a] >= pt[b]
            for a in vs
            for b in vs
            if a in rank and b in rank and rank[a] < rank[b]
        )
        if ok:
            yield pt


def _eval_at(w: Term, pt: dict):
    return weight_value(apply_subst(w, {v: Num(x) for v, x in pt.items()}))


@lru_cache(maxsize=100_000)
def _internal_dominance(a: Term, b: Term, strict: bool, order: tuple) -> str:
    if a == b:
        return DISPROVED if strict else PROVED
    variables = sorted(vars_of(a) | vars_of(b), key=lambda v: v.name)
    order = [v for v in order if v in set(variables)]
    for pt in _sample_points(variables, order):
        try:
            va, vb = _eval_at(a, pt), _eval_at(b, pt)
        except (OverflowError, ValueError):
            continue
        if (va <= vb) if strict else (va < vb):
            return DISPROVED
    pa, pb = _wpoly(a), _wpoly(b)
    if pa is None or pb is None:
        return UNKNOWN
    diff = pa - pb
    mapping = _chain_subst(variables, order)
    for atom in diff.atoms():
        if type(atom) is App:
            mapping[atom] = Poly.const(_lower_bound(atom)) + Poly.atom(
                Var(f"_e{len(mapping)}")
            )
    shifted = _substitute(diff, mapping)
    if any(c < 0 for c in shifted.terms.values()):
        return UNKNOWN
    if strict and shifted.const_value() <= 0:
        return UNKNOWN
    return PROVED


# -- SMT-LIB obligations ----------------------------------------------------


def _smt_term(w: Term) -> str:
    ty = type(w)
    if ty is Num:
        return str(int(w.value))
    if ty is Var:
        return w.name
    op = {"+": "+", "*": "*", "^": "^"}[w.fun]
    return f"({op} {_smt_term(w.args[0])} {_smt_term(w.args[1])})"


def obligation_smt2(a: Term, b: Term, strict: bool, order: Sequence[Var] = ()) -> str:
    """Validity of ``a > b`` (or ``>=``) as an unsatisfiability problem."""
    variables = sorted(vars_of(a) | vars_of(b), key=lambda v: v.name)
    lines = ["(set-logic ALL)"]
    for v in variables:
        lines.append(f"(declare-const {v.name} Int)")
    hyps = [f"(>= {v.name} 1)" for v in variables]
    present = [v for v in order if v in set(variables)]
    hyps += [f"(>= {x.name} {y.name})" for x, y in zip(present, present[1:])]
    if hyps:
        lines.append(f"(assert (and {' '.join(hyps)}))" if len(hyps) > 1 else f"(assert {hyps[0]})")
    rel = ">" if strict else ">="
    lines.append(f"(assert (not ({rel} {_smt_term(a)} {_smt_term(b)})))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def run_solver(document: str, solver_cmd: str, timeout: float = 100.0) -> str:
    """Run an external SMT-LIB2 solver; returns ``sat``, ``unsat`` or ``unknown``."""
    exe = solver_cmd.split()[0] if solver_cmd else ""
    if not exe or shutil.which(exe) is None:
        raise SolverUnavailable(f"solver command not found: {solver_cmd!r}")
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as fh:
        fh.write(document)
        path = fh.name
    cmd = solver_cmd.replace("{file}", path) if "{file}" in solver_cmd else f"{solver_cmd} {path}"
    try:
        proc = subprocess.run(
            cmd, shell=True, capture_output=True, text=True, timeout=timeout
        )
    except subprocess.TimeoutExpired:
        return "timeout"
    finally:
        Path(path).unlink(missing_ok=True)
    first = (proc.stdout.strip().splitlines() or ["unknown"])[0].strip()
    return first if first in ("sat", "unsat", "unknown") else "unknown"


def prove_dominance(
    a: Term,
    b: Term,
    strict: bool,
    order: Sequence[Var] = (),
    solver_cmd: Optional[str] = None,
    require_solver: bool = False,
    timeout: float = 100.0,
) -> str:
    """Decide ``forall vars >= 1 (with order hypotheses): a > b`` (or ``>=``).

    Returns ``proved``, ``disproved`` (a concrete counterexample exists) or
    ``unknown``.  The internal prover runs first; an external solver is only
    consulted when it is configured and the internal verdict is unknown.
    """
    verdict = _internal_dominance(a, b, strict, tuple(order))
    if verdict != UNKNOWN:
        return verdict
    if solver_cmd is None:
        if require_solver:
            raise SolverUnavailable("external discharge requested but no solver configured")
        return UNKNOWN
    answer = run_solver(obligation_smt2(a, b, strict, order), solver_cmd, timeout)
    if answer == "unsat":
        return PROVED
    return UNKNOWN


def weight_ge_one_sample(w: Term, trials: int = 50, seed: int = 0) -> bool:
    import random

    rng = random.Random(seed)
    vs = list(vars_of(w))
    for _ in range(trials):
        pt = {v: rng.randint(1, 4) for v in vs}
        if _eval_at(w, pt) < 1:
            return False
    return True


def log2_weight(t: Term) -> float:
    v = ground_weight(t)
    if isinstance(v, int):
        return math.log2(v)
    return float(mpmath.log(v, 2))
