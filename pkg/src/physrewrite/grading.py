"""Marking student equations against a weighted scheme.

A scheme entry ``(c_k, w_k, target)`` is awarded when some student equation,
solved for ``target``, has the same ARI normal form as ``c_k`` solved for the
same target.  Energy and momentum symbols are expanded first so that answers
written with ``E0``/``p1``-style shorthands and answers written in masses and
speeds meet in one vocabulary.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .engine import algebraically_equal, counting_steps
from .eqsolver import Equation, solve_for
from .parser import ParseError, normalize_param_name, parse_expr
from .printer import to_text
from .terms import App, NaN, NaNTerm, Param, Term, with_children

KINEMATIC_SUBSTITUTIONS = {
    "E_0": "m1*v0^2/2",
    "p_0": "m1*v0",
    "E_1": "m1*v1^2/2",
    "p_1": "m1*v1",
    "E_2": "m2*v2^2/2",
    "p_2": "m2*v2",
}
_SUBST_TERMS = {Param(k): parse_expr(v) for k, v in KINEMATIC_SUBSTITUTIONS.items()}


def _substitute(t: Term) -> Term:
    if type(t) is Param:
        return _SUBST_TERMS.get(t, t)
    if type(t) is App:
        return with_children(t, [_substitute(a) for a in t.args])
    return t


def apply_kinematic_substitutions(eq: Equation) -> Equation:
    """Replace ``E0, p0, E1, p1, E2, p2`` by their mass/speed expressions."""
    # the replacement texts contain none of the replaced symbols, so one pass is exhaustive
    return Equation(_substitute(eq.lhs), _substitute(eq.rhs))


def _fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class SchemeEntry:
    equation: Equation
    weight: Fraction
    target: str

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("scheme weights must be positive")


@dataclass(frozen=True)
class MarkingScheme:
    question_id: str
    entries: tuple

    @property
    def max_mark(self) -> Fraction:
        return sum((e.weight for e in self.entries), Fraction(0))

    @staticmethod
    def from_dict(data: dict) -> "MarkingScheme":
        entries = []
        for item in data["entries"]:
            entries.append(
                SchemeEntry(
                    Equation.parse(item["equation"]),
                    _fraction(item.get("weight", 1)),
                    normalize_param_name(item["target"]),
                )
            )
        return MarkingScheme(str(data.get("question_id", "")), tuple(entries))

    @staticmethod
    def load(path) -> "MarkingScheme":
        return MarkingScheme.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class ResponseRecord:
    """One student's equations; unparseable equations are kept as ``None``."""

    student_id: str
    equations: tuple
    ground_truth_mark: Optional[Fraction] = None
    sources: tuple = ()

    @staticmethod
    def from_dict(data: dict) -> "ResponseRecord":
        if not isinstance(data, dict) or "student_id" not in data:
            raise ValueError("record needs a student_id")
        texts = data.get("equations", [])
        if not isinstance(texts, list) or not all(isinstance(s, str) for s in texts):
            raise ValueError("equations must be a list of strings")
        eqs = []
        for text in texts:
            try:
                eqs.append(Equation.parse(text))
            except (ParseError, ValueError, KeyError, IndexError):
                # a garbled equation cannot be solved, exactly like a NaN branch
                eqs.append(None)
        mark = data.get("mark")
        return ResponseRecord(
            str(data["student_id"]),
            tuple(eqs),
            None if mark is None else _fraction(mark),
            tuple(texts),
        )


@dataclass
class EntryMatch:
    entry: int
    equation: int
    normal_form: str


@dataclass
class StudentGrade:
    student_id: str
    mark: Fraction
    ground_truth: Optional[Fraction] = None
    matches: list = field(default_factory=list)
    error: Optional[str] = None
    unparsed: list = field(default_factory=list)

    @property
    def failed(self) -> bool:
        if self.error is not None:
            return True
        return self.ground_truth is not None and self.mark != self.ground_truth

    def to_dict(self) -> dict:
        return {
            "student_id": self.student_id,
            "mark": str(self.mark),
            "ground_truth": None if self.ground_truth is None else str(self.ground_truth),
            "failed": self.failed,
            "error": self.error,
            "unparsed_equations": self.unparsed,
            "matches": [m.__dict__ for m in self.matches],
        }


@dataclass
class GradeReport:
    question_id: str
    tprime: bool
    max_mark: Fraction
    grades: list = field(default_factory=list)
    steps: int = 0
    wall_time: float = 0.0

    @property
    def fails(self) -> int:
        return sum(g.failed for g in self.grades)

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "question_id": self.question_id,
            "tprime": self.tprime,
            "max_mark": str(self.max_mark),
            "records": len(self.grades),
            "fails": self.fails,
            "steps": self.steps,
            "grades": [g.to_dict() for g in self.grades],
        }
        if timing:
            out["wall_time_sec"] = round(self.wall_time, 3)
        return out

    def table(self) -> str:
        rows = [f"{'student':<16} {'mark':>6} {'truth':>6}  status"]
        for g in self.grades:
            truth = "-" if g.ground_truth is None else str(g.ground_truth)
            status = "FAIL" if g.failed else "ok"
            if g.error:
                status += f" ({g.error})"
            rows.append(f"{g.student_id:<16} {str(g.mark):>6} {truth:>6}  {status}")
        rows.append(f"fails: {self.fails}/{len(self.grades)}  steps: {self.steps}")
        return "\n".join(rows)


class _Solver:
    """Memoized ``f``: equation solved for a target, then normalized."""

    def __init__(self, tprime: bool):
        self.tprime = tprime
        self.cache: dict = {}

    def __call__(self, eq: Optional[Equation], target: str) -> Term:
        if eq is None:
            return NaN
        key = (eq, target)
        hit = self.cache.get(key)
        if hit is None:
            hit = solve_for(apply_kinematic_substitutions(eq), target, tprime=self.tprime)
            self.cache[key] = hit
        return hit


def _grade(resp: ResponseRecord, scheme: MarkingScheme, f: _Solver) -> StudentGrade:
    grade = StudentGrade(resp.student_id, Fraction(0), resp.ground_truth_mark)
    grade.unparsed = [resp.sources[j] for j, e in enumerate(resp.equations) if e is None and j < len(resp.sources)]
    for k, entry in enumerate(scheme.entries):
        expected = f(entry.equation, entry.target)
        if isinstance(expected, NaNTerm):
            continue
        for j, d in enumerate(resp.equations):
            got = f(d, entry.target)
            if algebraically_equal(got, expected, f.tprime):
                grade.mark += entry.weight
                grade.matches.append(EntryMatch(k, j, to_text(got, flat=True)))
                break
    return grade


def grade_trs(resp: ResponseRecord, scheme: MarkingScheme, tprime: bool = False) -> Fraction:
    """Sum of the weights of the scheme entries some equation of ``resp`` matches."""
    return _grade(resp, scheme, _Solver(tprime)).mark


def grade_record(resp: ResponseRecord, scheme: MarkingScheme, tprime: bool = False) -> StudentGrade:
    return _grade(resp, scheme, _Solver(tprime))


def read_corpus(path) -> list:
    """Records of a JSON-lines corpus; broken lines come back as ``(lineno, error)``."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(ResponseRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            out.append((lineno, f"line {lineno}: {exc}"))
    return out


def _grade_chunk(args):
    records, scheme, tprime = args
    f = _Solver(tprime)
    with counting_steps() as steps:
        grades = [_grade(r, scheme, f) for r in records]
    return grades, steps[0]


def grade_records(records: list, scheme: MarkingScheme, tprime: bool = False, workers: int = 1, question_id=None) -> GradeReport:
    start = time.perf_counter()
    report = GradeReport(question_id or scheme.question_id, tprime, scheme.max_mark)
    good = [r for r in records if isinstance(r, ResponseRecord)]
    if workers > 1 and len(good) > 1:
        chunks = [good[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_grade_chunk, [(c, scheme, tprime) for c in chunks]))
        # restore corpus order: chunk i holds records i, i+w, i+2w, ...
        ordered = [None] * len(good)
        for i, (grades, steps) in enumerate(results):
            report.steps += steps
            for k, g in enumerate(grades):
                ordered[i + k * workers] = g
        graded = iter(ordered)
    else:
        grades, steps = _grade_chunk((good, scheme, tprime))
        report.steps = steps
        graded = iter(grades)
    for r in records:
        if isinstance(r, ResponseRecord):
            report.grades.append(next(graded))
        else:
            lineno, msg = r
            report.grades.append(StudentGrade(f"<line {lineno}>", Fraction(0), error=msg))
    report.wall_time = time.perf_counter() - start
    return report


def run_corpus(corpus_path, scheme_path, tprime: bool = False, workers: int = 1) -> GradeReport:
    """Grade every record of a corpus file and count disagreements with its marks."""
    scheme = MarkingScheme.load(scheme_path)
    return grade_records(read_corpus(corpus_path), scheme, tprime, workers)
