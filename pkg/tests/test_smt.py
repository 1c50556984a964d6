import math
import random
import shutil
from fractions import Fraction
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import rel_close, sympy_value
from physrewrite.eqsolver import Equation
from physrewrite.grading import MarkingScheme, ResponseRecord, read_corpus
from physrewrite.parser import parse_expr
from physrewrite.printer import to_text
from physrewrite.smt import (
    AXIOM_SETS,
    T_FULL,
    T_MINIMAL,
    T_REDUCED,
    SmtSyntaxError,
    check_smt2,
    eliminate_radicals,
    emit_equivalence_problem,
    grade_smt,
    nonzero_constraints,
    smt_term,
)
from physrewrite.terms import App, Param
from physrewrite.weights import SolverUnavailable
from strategies import ground_terms

DATA = resources.files("physrewrite") / "data"
Z3 = shutil.which("z3")


def test_axiom_sets_nested():
    assert len(T_FULL.formulas) == 7
    assert set(T_MINIMAL.formulas) < set(T_REDUCED.formulas) < set(T_FULL.formulas)
    assert set(AXIOM_SETS) == {"full", "reduced", "minimal"}


@pytest.mark.parametrize(
    "text,expected",
    [
        ("v2 = ((m1*v0^2 - m1*v1^2)/m2)^(1/2)", ["m_2"]),
        ("m1*v0^2 = m1*v1^2 + m2*v2^2", []),
        ("x = a/(b/c)", ["b/c", "c"]),
        ("x = a*b^(-1)", ["b"]),
    ],
)
def test_nonzero_constraints(text, expected):
    out = nonzero_constraints([Equation.parse(text)])
    assert sorted(to_text(t, flat=True) for t in out) == sorted(expected)


def test_paper_radical_example():
    eq, elim = eliminate_radicals(Equation.parse("E0 = m1*cos(theta) + (m2 - m1)^(1/2)"))
    expected = Equation.parse("E0 = m1*cos(theta) + R")
    assert eq == Equation(expected.lhs, App("+", (expected.rhs.args[0], Param("r0"))))
    assert [(to_text(r), to_text(rad, flat=True)) for r, rad in elim.fresh_vars] == [("r0", "m_2 - m_1")]
    ops = [op for op, _, _ in elim.residual]
    assert ops == [">=", "="]


def test_radical_free_untouched():
    eq = Equation.parse("m1*v0 = m2*v2")
    out, elim = eliminate_radicals(eq)
    assert out == eq and elim.fresh_vars == []


def test_two_radicals_and_sqrt_syntax():
    eq, elim = eliminate_radicals(Equation.parse("v0 = sqrt(m1) + (m2)^(1/2) + sqrt(m1)"))
    assert len(elim.fresh_vars) == 2
    assert {to_text(r) for r, _ in elim.fresh_vars} == {"r0", "r1"}


def test_fresh_names_avoid_parameters():
    # parsed input spells indices as r_0, so clash only with hand-built names
    eq, elim = eliminate_radicals(Equation(Param("r0"), App("sqrt", (Param("m_1"),))))
    assert elim.fresh_vars[0][0] == Param("r1")
    parsed, elim = eliminate_radicals(Equation.parse("r0 = sqrt(m1)"))
    assert parsed.lhs == Param("r_0") and elim.fresh_vars[0][0] == Param("r0")


def _radicand_terms():
    return ground_terms(max_leaves=3, names=["a", "b", "c"], trig=False, powers=False)


@settings(max_examples=200)
@given(_radicand_terms(), _radicand_terms(), st.booleans(), st.integers(0, 10_000))
def test_equisatisfiable(radicand, offset, make_true, seed):
    """Truth of ``t = sqrt(R) + B`` matches truth of the eliminated system with r = the nonnegative root."""
    rng = random.Random(seed)
    vals = {n: rng.uniform(0.2, 3.0) for n in ("a", "b", "c")}
    root = math.sqrt(sympy_value(radicand, vals))
    vals["t"] = root + sympy_value(offset, vals) if make_true else rng.uniform(0.2, 30.0)
    eq = Equation(Param("t"), App("+", (App("sqrt", (radicand,)), offset)))
    original = rel_close(sympy_value(eq.lhs, vals), sympy_value(eq.rhs, vals), 1e-9)
    out, elim = eliminate_radicals(eq)
    ((r, rad),) = elim.fresh_vars
    # the constraints r >= 0 and r*r = R have exactly one solution, the principal root
    vals[r.name] = math.sqrt(sympy_value(rad, vals))
    transformed = rel_close(sympy_value(out.lhs, vals), sympy_value(out.rhs, vals), 1e-9)
    assert original == transformed
    vals[r.name] = -vals[r.name]
    assert vals[r.name] <= 0


def test_rendering():
    assert smt_term(parse_expr("a^3")).startswith("(*")
    assert "usin" in smt_term(parse_expr("sin(a)"))


FIXTURE_PAIRS = [
    ("m1*v0^2 = m1*v1^2 + m2*v2^2", "E0 = E1 + E2"),
    ("v0 = sqrt((m1*v1^2 + m2*v2^2)/m1)", "E0 = E1 + E2"),
    ("m1*v0 = m1*v1 + m2*v2", "E0 = E1 + E2"),
    ("m1*v0 = m1*v1*cos(theta) + m2*v2*cos(phi)", "m1*v0 = m1*v1*cos(theta) + m2*v2*cos(phi)"),
    ("m1*v0 = sin(pi/2 - phi)*m2*v2 + cos(theta)*m1*v1", "m1*v0 = m1*v1*cos(theta) + m2*v2*cos(phi)"),
    ("0 = m1*v1*sin(theta) - m2*v2*sin(phi)", "m1*v1*sin(theta) = m2*v2*sin(phi)"),
    ("v2 = ((m1*v0^2 - m1*v1^2)/m2)^(1/2)", "E0 = E1 + E2"),
    ("a/(b/c) = d", "a*c = b*d"),
    ("x^(-2) = y", "1 = x*x*y"),
    ("v0 = v0", "a = a"),
]


def _subst(text):
    from physrewrite.grading import apply_kinematic_substitutions

    return apply_kinematic_substitutions(Equation.parse(text))


@pytest.mark.parametrize("axioms", ["minimal", "reduced", "full"])
@pytest.mark.parametrize("d,c", FIXTURE_PAIRS)
def test_documents_parse(d, c, axioms):
    docs = emit_equivalence_problem(_subst(d), _subst(c), AXIOM_SETS[axioms])
    assert len(docs) == 2
    for doc in docs:
        check_smt2(doc)
        assert doc.count("(check-sat)") == 1


@pytest.mark.parametrize(
    "text",
    [
        "(assert (= x 1.0))\n(check-sat)",
        "(declare-fun f (Real) Real)\n(assert (= (f 1.0 2.0) 1.0))",
        "(declare-const x Real)\n(assert (= x 1.0)",
        "(frobnicate)",
    ],
)
def test_checker_rejects(text):
    with pytest.raises(SmtSyntaxError):
        check_smt2(text)


def test_no_solver_mode():
    scheme = MarkingScheme.load(DATA / "q25_scheme.json")
    rec = ResponseRecord.from_dict({"student_id": "s", "equations": ["E0 = E1 + E2", "v0 = v1"]})
    g = grade_smt(rec, scheme)
    assert g.mark == 0 and g.unknown
    assert len(g.documents) == 2 and len(g.flags) == 2


def test_missing_solver():
    scheme = MarkingScheme.load(DATA / "q25_scheme.json")
    rec = ResponseRecord.from_dict({"student_id": "s", "equations": ["E0 = E1 + E2"]})
    with pytest.raises(SolverUnavailable):
        grade_smt(rec, scheme, solver_cmd="no-such-solver-binary {file}")


@pytest.mark.skipif(Z3 is None, reason="no z3 executable on PATH")
def test_z3_grades_q25_under_minimal_axioms():
    scheme = MarkingScheme.load(DATA / "q25_scheme.json")
    for rec in read_corpus(DATA / "q25_corpus.jsonl"):
        if not isinstance(rec, ResponseRecord):
            continue
        g = grade_smt(rec, scheme, T_MINIMAL, solver_cmd="z3 -T:10 {file}", timeout=20)
        assert g.mark == rec.ground_truth_mark, (rec.student_id, g.flags)


@pytest.mark.skipif(Z3 is None, reason="no z3 executable on PATH")
def test_z3_misses_complementary_angle_without_addition_axioms():
    scheme = MarkingScheme.load(DATA / "q26_scheme.json")
    wrong = []
    for rec in read_corpus(DATA / "q26_corpus.jsonl"):
        g = grade_smt(rec, scheme, T_MINIMAL, solver_cmd="z3 -T:10 {file}", timeout=20)
        if g.mark != rec.ground_truth_mark:
            wrong.append(rec.student_id)
    assert wrong == ["q26-complementary"]
