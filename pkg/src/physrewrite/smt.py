"""Grading through an external SMT solver.

Equivalence of a student equation ``d`` and a scheme equation ``c`` is posed
as two unsatisfiability problems, ``Z + T + {d, not c}`` and
``Z + T + {c, not d}``, where ``T`` is a set of quantified trigonometric
axioms over uninterpreted ``sin``/``cos`` and ``Z`` keeps every denominator
away from zero.  Square roots are replaced by fresh non-negative variables
first so that the problems are polynomial.
"""

from __future__ import annotations

import re
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .canonizer import DomainError, simp
from .eqsolver import Equation
from .grading import MarkingScheme, ResponseRecord, apply_kinematic_substitutions
from .terms import App, NaNTerm, Num, Param, Quote, Term, Var, iter_subterms, with_children
from .weights import SolverUnavailable, run_solver

SIN, COS = "usin", "ucos"
DEFAULT_TIMEOUT = 100.0
LOGIC = "UFNIRA"

_AXIOM_TEXT = [
    ("sin(-x) = -sin(x)", f"(forall ((x Real)) (= ({SIN} (- x)) (- ({SIN} x))))"),
    ("cos(-x) = cos(x)", f"(forall ((x Real)) (= ({COS} (- x)) ({COS} x)))"),
    ("sin(x)^2 = 1 - cos(x)^2", f"(forall ((x Real)) (= (* ({SIN} x) ({SIN} x)) (- 1.0 (* ({COS} x) ({COS} x)))))"),
    (
        "sin(x1 + x2) = sin(x1)*cos(x2) + cos(x1)*sin(x2)",
        f"(forall ((x1 Real) (x2 Real)) (= ({SIN} (+ x1 x2)) (+ (* ({SIN} x1) ({COS} x2)) (* ({COS} x1) ({SIN} x2)))))",
    ),
    (
        "cos(x1 + x2) = cos(x1)*cos(x2) - sin(x1)*sin(x2)",
        f"(forall ((x1 Real) (x2 Real)) (= ({COS} (+ x1 x2)) (- (* ({COS} x1) ({COS} x2)) (* ({SIN} x1) ({SIN} x2)))))",
    ),
    (
        "cos((n+2)*x) = 2*cos(x)*cos((n+1)*x) - cos(n*x)",
        f"(forall ((n Int) (x Real)) (= ({COS} (* (+ (to_real n) 2.0) x)) "
        f"(- (* 2.0 ({COS} x) ({COS} (* (+ (to_real n) 1.0) x))) ({COS} (* (to_real n) x)))))",
    ),
    (
        "sin((n+2)*x) = 2*cos(x)*sin((n+1)*x) - sin(n*x)",
        f"(forall ((n Int) (x Real)) (= ({SIN} (* (+ (to_real n) 2.0) x)) "
        f"(- (* 2.0 ({COS} x) ({SIN} (* (+ (to_real n) 1.0) x))) ({SIN} (* (to_real n) x)))))",
    ),
]


@dataclass(frozen=True)
class AxiomSet:
    name: str
    formulas: tuple
    descriptions: tuple = ()


T_FULL = AxiomSet("full", tuple(f for _, f in _AXIOM_TEXT), tuple(d for d, _ in _AXIOM_TEXT))
T_REDUCED = AxiomSet("reduced", T_FULL.formulas[:3], T_FULL.descriptions[:3])
T_MINIMAL = AxiomSet("minimal", T_FULL.formulas[:2], T_FULL.descriptions[:2])
AXIOM_SETS = {a.name: a for a in (T_FULL, T_REDUCED, T_MINIMAL)}


# -- non-zero constraints ---------------------------------------------------


def _denominators(t: Term, out: list) -> None:
    if type(t) is not App:
        return
    for a in t.args:
        _denominators(a, out)
    den = None
    if t.fun == "/":
        den = t.args[1]
    elif t.fun == "^" and (_const_value(t.args[1]) or 0) < 0:
        den = t.args[0]
    if den is not None and type(den) is not Num and den not in out:
        out.append(den)


def nonzero_constraints(eqs) -> list:
    """Every syntactic denominator (or base of a negative power), outermost first."""
    found: list = []
    for eq in eqs:
        for side in (eq.lhs, eq.rhs):
            inner: list = []
            _denominators(side, inner)
            for d in inner:
                if d not in found:
                    found.append(d)
    # _denominators is post-order; present outer denominators first
    return sorted(found, key=lambda d: -sum(1 for _ in iter_subterms(d)))


# -- radical elimination ----------------------------------------------------


@dataclass
class RadicalElimination:
    fresh_vars: list = field(default_factory=list)

    @property
    def residual(self) -> list:
        """``(op, lhs, rhs)`` constraints: ``r >= 0`` and ``r*r = radicand`` per radical."""
        out = []
        for r, radicand in self.fresh_vars:
            out.append((">=", r, Num(0)))
            out.append(("=", App("*", (r, r)), radicand))
        return out


def _const_value(t: Term) -> Optional[Fraction]:
    if type(t) is Num:
        return t.value
    if any(type(u) in (Param, Var) for u in iter_subterms(t)):
        return None
    try:
        v = simp(t)
    except (DomainError, ValueError, ZeroDivisionError):
        return None
    return v.value if type(v) is Num else None


def _is_sqrt(t: Term) -> bool:
    if type(t) is not App:
        return False
    if t.fun == "sqrt":
        return True
    return t.fun == "^" and _const_value(t.args[1]) == Fraction(1, 2)


class _Eliminator:
    def __init__(self, taken: set, elim: RadicalElimination):
        self.taken = taken
        self.elim = elim
        self.known = {rad: r for r, rad in elim.fresh_vars}

    def fresh(self) -> Param:
        i = len(self.elim.fresh_vars)
        while Param(f"r{i}") in self.taken:
            i += 1
        p = Param(f"r{i}")
        self.taken.add(p)
        return p

    def __call__(self, t: Term) -> Term:
        if type(t) is not App:
            return t
        t = with_children(t, [self(a) for a in t.args])
        if not _is_sqrt(t):
            return t
        radicand = t.args[0]
        r = self.known.get(radicand)
        if r is None:
            r = self.fresh()
            self.known[radicand] = r
            self.elim.fresh_vars.append((r, radicand))
        return r


def eliminate_radicals(eq: Equation, elim: Optional[RadicalElimination] = None, taken: Optional[set] = None):
    """Replace each square root by a fresh variable ``r_i`` with ``r_i >= 0, r_i*r_i = radicand``."""
    elim = elim if elim is not None else RadicalElimination()
    if taken is None:
        taken = {u for side in (eq.lhs, eq.rhs) for u in iter_subterms(side) if type(u) is Param}
    run = _Eliminator(taken, elim)
    return Equation(run(eq.lhs), run(eq.rhs)), elim


# -- SMT-LIB rendering ------------------------------------------------------


def _real(v: Fraction) -> str:
    mag = abs(v)
    text = f"{mag.numerator}.0" if mag.denominator == 1 else f"(/ {mag.numerator}.0 {mag.denominator}.0)"
    return f"(- {text})" if v < 0 else text


def _symbol(p: Param) -> str:
    return p.name


def smt_term(t: Term) -> str:
    ty = type(t)
    if ty is Num:
        return _real(t.value)
    if ty is Param:
        return _symbol(t)
    if ty is Quote:
        return smt_term(t.inner)
    if ty is Var or ty is NaNTerm:
        raise ValueError(f"cannot render {t!r} as SMT-LIB")
    f, args = t.fun, t.args
    if f in ("+", "-", "*", "/"):
        return f"({f} {smt_term(args[0])} {smt_term(args[1])})"
    if f == "uminus":
        return f"(- {smt_term(args[0])})"
    if f == "sin":
        return f"({SIN} {smt_term(args[0])})"
    if f == "cos":
        return f"({COS} {smt_term(args[0])})"
    if f == "^":
        base, exp = args
        value = _const_value(exp)
        if value is not None and value.denominator == 1:
            n = int(value)
            if n == 0:
                return "1.0"
            b = smt_term(base)
            prod = b if abs(n) == 1 else f"(* {' '.join([b] * abs(n))})"
            return prod if n > 0 else f"(/ 1.0 {prod})"
        return f"(rpow {smt_term(base)} {smt_term(exp)})"
    if f == "sqrt":
        return f"(rpow {smt_term(args[0])} 0.5)"
    raise ValueError(f"no SMT-LIB rendering for {f}")


def _eq(eq: Equation) -> str:
    return f"(= {smt_term(eq.lhs)} {smt_term(eq.rhs)})"


def _params(terms) -> list:
    found = {u for t in terms for u in iter_subterms(t) if type(u) is Param}
    return sorted(found, key=lambda p: p.name)


def _uses(terms, fun: str) -> bool:
    return any(type(u) is App and u.fun == fun for t in terms for u in iter_subterms(t))


def _document(zs, axioms: AxiomSet, residual, assume: str, refute: str, terms, positive: bool, fresh=()) -> str:
    lines = [f"(set-logic {LOGIC})"]
    lines.append(f"(declare-fun {SIN} (Real) Real)")
    lines.append(f"(declare-fun {COS} (Real) Real)")
    if _uses(terms, "^") or _uses(terms, "sqrt"):
        lines.append("(declare-fun rpow (Real Real) Real)")
    for p in _params(terms):
        lines.append(f"(declare-const {_symbol(p)} Real)")
    for p in _params(terms):
        if p.name == "pi":
            lines.append("(assert (and (> pi 3.1415926) (< pi 3.1415927)))")
        elif positive and p not in fresh:
            lines.append(f"(assert (> {_symbol(p)} 0.0))")
    for ax in axioms.formulas:
        lines.append(f"(assert {ax})")
    for z in zs:
        lines.append(f"(assert (not (= {smt_term(z)} 0.0)))")
    for op, a, b in residual:
        lines.append(f"(assert ({op} {smt_term(a)} {smt_term(b)}))")
    lines.append(f"(assert {assume})")
    lines.append(f"(assert (not {refute}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def emit_equivalence_problem(d: Equation, c: Equation, axioms: AxiomSet = T_MINIMAL, positive: bool = True):
    """Two documents; ``d`` and ``c`` are equivalent iff both are unsatisfiable.

    With ``positive`` every parameter is asserted to be positive, the same
    domain the solving grader works in.
    """
    zs = nonzero_constraints([d, c])
    taken = {u for eq in (d, c) for s in (eq.lhs, eq.rhs) for u in iter_subterms(s) if type(u) is Param}
    elim = RadicalElimination()
    d2, _ = eliminate_radicals(d, elim, taken)
    c2, _ = eliminate_radicals(c, elim, taken)
    residual = elim.residual
    terms = [d2.lhs, d2.rhs, c2.lhs, c2.rhs] + list(zs) + [t for _, a, b in residual for t in (a, b)]
    fresh = {r for r, _ in elim.fresh_vars}
    doc1 = _document(zs, axioms, residual, _eq(d2), _eq(c2), terms, positive, fresh)
    doc2 = _document(zs, axioms, residual, _eq(c2), _eq(d2), terms, positive, fresh)
    return doc1, doc2


# -- SMT-LIB syntax check ---------------------------------------------------

_SEXP_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")
_BUILTINS = {
    "=", "+", "-", "*", "/", "<", ">", "<=", ">=", "and", "or", "not", "=>",
    "to_real", "forall", "exists", "ite", "true", "false", "distinct",
}
_COMMANDS = {
    "set-logic", "set-option", "set-info", "declare-fun", "declare-const",
    "define-fun", "assert", "check-sat", "get-model", "exit",
}
_SORTS = {"Real", "Int", "Bool"}
_NUMERAL = re.compile(r"^\d+(\.\d+)?$")


class SmtSyntaxError(ValueError):
    pass


def _read_sexps(text: str) -> list:
    stack: list = [[]]
    pos = 0
    text = "\n".join(line.split(";", 1)[0] for line in text.splitlines())
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise SmtSyntaxError(f"bad token at offset {pos}")
            break
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise SmtSyntaxError(f"unbalanced ')' at offset {pos}")
            done = stack.pop()
            stack[-1].append(done)
        elif m.group(3):
            stack[-1].append(m.group(3))
    if len(stack) != 1:
        raise SmtSyntaxError("unbalanced '('")
    return stack[0]


def _check_term(t, declared: dict, bound: set) -> None:
    if isinstance(t, str):
        if _NUMERAL.match(t) or t in bound or t in ("true", "false"):
            return
        if declared.get(t) == 0:
            return
        raise SmtSyntaxError(f"undeclared constant {t!r}")
    if not t:
        raise SmtSyntaxError("empty application")
    head = t[0]
    if head in ("forall", "exists"):
        if len(t) != 3 or not isinstance(t[1], list):
            raise SmtSyntaxError("malformed quantifier")
        names = set()
        for b in t[1]:
            if not (isinstance(b, list) and len(b) == 2 and isinstance(b[0], str) and b[1] in _SORTS):
                raise SmtSyntaxError(f"bad binder {b!r}")
            names.add(b[0])
        _check_term(t[2], declared, bound | names)
        return
    if not isinstance(head, str):
        raise SmtSyntaxError("non-symbol in function position")
    if head not in _BUILTINS:
        arity = declared.get(head)
        if arity is None:
            raise SmtSyntaxError(f"undeclared function {head!r}")
        if arity != len(t) - 1:
            raise SmtSyntaxError(f"{head} expects {arity} arguments, got {len(t) - 1}")
    for a in t[1:]:
        _check_term(a, declared, bound)


def check_smt2(text: str) -> None:
    """Raise :class:`SmtSyntaxError` unless ``text`` is well-formed for our fragment."""
    declared: dict = {}
    saw_check = False
    for cmd in _read_sexps(text):
        if not isinstance(cmd, list) or not cmd or cmd[0] not in _COMMANDS:
            raise SmtSyntaxError(f"unknown command {cmd!r}")
        head = cmd[0]
        if head == "declare-fun":
            if len(cmd) != 4 or not isinstance(cmd[2], list) or cmd[3] not in _SORTS:
                raise SmtSyntaxError(f"malformed declare-fun {cmd!r}")
            if cmd[1] in declared:
                raise SmtSyntaxError(f"duplicate declaration of {cmd[1]}")
            declared[cmd[1]] = len(cmd[2])
        elif head == "declare-const":
            if len(cmd) != 3 or cmd[2] not in _SORTS:
                raise SmtSyntaxError(f"malformed declare-const {cmd!r}")
            if cmd[1] in declared:
                raise SmtSyntaxError(f"duplicate declaration of {cmd[1]}")
            declared[cmd[1]] = 0
        elif head == "assert":
            if len(cmd) != 2:
                raise SmtSyntaxError("assert takes one term")
            _check_term(cmd[1], declared, set())
        elif head == "check-sat":
            saw_check = True
    if not saw_check:
        raise SmtSyntaxError("no check-sat command")


# -- grading ----------------------------------------------------------------

EQUIVALENT, NOT_EQUIVALENT, UNDECIDED = "equivalent", "not_equivalent", "unknown"


def decide_equivalence(d: Equation, c: Equation, axioms: AxiomSet, solver_cmd: str, timeout: float = DEFAULT_TIMEOUT):
    """``(verdict, (answer1, answer2))`` from the two-unsat protocol."""
    doc1, doc2 = emit_equivalence_problem(d, c, axioms)
    a1 = run_solver(doc1, solver_cmd, timeout)
    if a1 == "sat":
        return NOT_EQUIVALENT, (a1, "skipped")
    a2 = run_solver(doc2, solver_cmd, timeout)
    if a1 == "unsat" and a2 == "unsat":
        return EQUIVALENT, (a1, a2)
    if a2 == "sat":
        return NOT_EQUIVALENT, (a1, a2)
    return UNDECIDED, (a1, a2)


@dataclass
class SmtGrade:
    student_id: str
    mark: Fraction
    flags: list = field(default_factory=list)
    documents: list = field(default_factory=list)

    @property
    def unknown(self) -> bool:
        return bool(self.flags)


def grade_smt(
    resp: ResponseRecord,
    scheme: MarkingScheme,
    axioms: AxiomSet = T_MINIMAL,
    solver_cmd: Optional[str] = None,
    timeout: float = DEFAULT_TIMEOUT,
    workers: int = 4,
) -> SmtGrade:
    """Mark ``resp`` with the solver deciding equivalence.

    Undecided comparisons award nothing and are listed in ``flags`` as
    ``(entry, equation, answers)``.  Without a solver only the documents are
    produced and every comparison is flagged.
    """
    out = SmtGrade(resp.student_id, Fraction(0))
    pairs = []
    for k, entry in enumerate(scheme.entries):
        c = apply_kinematic_substitutions(entry.equation)
        for j, d in enumerate(resp.equations):
            if d is None:
                continue
            pairs.append((k, j, apply_kinematic_substitutions(d), c))
    for k, j, d, c in pairs:
        out.documents.append((k, j) + emit_equivalence_problem(d, c, axioms))
    if solver_cmd is None:
        out.flags = [(k, j, ("no-solver", "no-solver")) for k, j, _, _ in pairs]
        return out
    exe = solver_cmd.split()[0] if solver_cmd.strip() else ""
    if not exe or shutil.which(exe) is None:
        raise SolverUnavailable(f"solver command not found: {solver_cmd!r}")

    def decide(item):
        k, j, d, c = item
        return k, j, decide_equivalence(d, c, axioms, solver_cmd, timeout)

    with ThreadPoolExecutor(max(1, workers)) as pool:
        results = list(pool.map(decide, pairs))
    awarded = set()
    for k, j, (verdict, answers) in results:
        if verdict == EQUIVALENT:
            awarded.add(k)
        elif verdict == UNDECIDED:
            out.flags.append((k, j, answers))
    for k in sorted(awarded):
        out.mark += scheme.entries[k].weight
    # an entry someone matched is not in doubt
    out.flags = [fl for fl in out.flags if fl[0] not in awarded]
    return out
