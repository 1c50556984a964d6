"""Command-line entry point: ``physrewrite <subcommand> ...``.

Exit codes: 0 success, 1 grading disagreed with ground truth, 2 usage or
input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .parser import ParseError
from .weights import SolverUnavailable

EXIT_OK, EXIT_FAILS, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="physrewrite", description="Normalize, compare and grade physics equations.")
    sub = p.add_subparsers(dest="command", required=True)

    n = sub.add_parser("normalize", help="print the ARI normal form of an expression")
    n.add_argument("expr")
    n.add_argument("--tprime", action="store_true", help="add the special-angle rules")
    n.add_argument("--trace", action="store_true", help="print every rewrite step")
    n.add_argument("--budget", type=_positive_int, default=100_000)

    e = sub.add_parser("equal", help="decide algebraic equality of two expressions")
    e.add_argument("left")
    e.add_argument("right")
    e.add_argument("--tprime", action="store_true")
    e.add_argument("--budget", type=_positive_int, default=100_000)

    g = sub.add_parser("grade", help="grade a corpus with the rewrite system")
    g.add_argument("--corpus", required=True)
    g.add_argument("--scheme", required=True)
    g.add_argument("--tprime", action="store_true")
    g.add_argument("--report", help="write a JSON report here (and a PNG figure beside it)")
    g.add_argument("--workers", type=_positive_int, default=1)

    s = sub.add_parser("grade-smt", help="grade a corpus through an SMT solver")
    s.add_argument("--corpus", required=True)
    s.add_argument("--scheme", required=True)
    s.add_argument("--axioms", choices=("minimal", "reduced", "full"), default="minimal")
    s.add_argument("--solver", help='solver command, e.g. "z3 {file}"; omit to only emit problems')
    s.add_argument("--timeout-sec", type=_positive_float, default=100.0)
    s.add_argument("--report", help="write a JSON report here")
    s.add_argument("--emit-dir", help="write the SMT-LIB2 documents into this directory")

    a = sub.add_parser("analyze", help="termination analysis of a rule system")
    a.add_argument("--system", required=True, help="builtin name (norm, canon, simp, clean, tprime) or a rule file")
    a.add_argument("--solver", help="external solver for undecided weight obligations")
    a.add_argument("--spot-trials", type=int, default=200)
    a.add_argument("--emit-obligations", metavar="DIR", help="write undischarged obligations as SMT-LIB2")
    a.add_argument("--report", help="write a JSON report here (and a PNG figure beside it)")

    c = sub.add_parser("confluence", help="critical-triple analysis of a rule system")
    c.add_argument("--system", required=True)
    c.add_argument("--with", dest="other", help="second system for cross overlaps")
    c.add_argument("--report", help="write a JSON report here")
    return p


def _load_system(name: str):
    from .rules import SYSTEM_NAMES, builtin_system, load_rule_file

    for known in SYSTEM_NAMES:
        if name.lower() == known.lower():
            return builtin_system(known)
    path = Path(name)
    if not path.exists():
        raise UsageError(f"{name}: neither a builtin system ({', '.join(SYSTEM_NAMES)}) nor a rule file")
    return load_rule_file(path)


def _parse(text: str, what: str):
    from .parser import parse_expr

    try:
        return parse_expr(text)
    except ParseError as exc:
        raise UsageError(f"{what}: {exc}\n  {text}\n  {' ' * exc.offset}^") from None


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=False) + "\n")


def _need_file(path: str) -> None:
    if not Path(path).is_file():
        raise UsageError(f"{path}: no such file")


def cmd_normalize(args) -> int:
    from .engine import ari_stages
    from .printer import to_text

    t = _parse(args.expr, "expression")
    traces = {} if args.trace else None
    stages = ari_stages(t, args.tprime, args.budget, traces)
    if traces is not None:
        for name, tr in traces.items():
            print(f"== {name}")
            for line in tr.lines():
                print(line)
    print(to_text(stages[-1][1], flat=True))
    return EXIT_OK


def cmd_equal(args) -> int:
    from .engine import algebraically_equal

    s, t = _parse(args.left, "left expression"), _parse(args.right, "right expression")
    print("equal" if algebraically_equal(s, t, args.tprime, args.budget) else "not equal")
    return EXIT_OK


def cmd_grade(args) -> int:
    from .grading import run_corpus

    _need_file(args.corpus)
    _need_file(args.scheme)
    report = run_corpus(args.corpus, args.scheme, args.tprime, args.workers)
    print(report.table())
    if args.report:
        _write_json(args.report, report.to_dict())
        from .plotting import grade_figure

        grade_figure(report, Path(args.report).with_suffix(".png"))
    has_truth = any(g.ground_truth is not None or g.error for g in report.grades)
    return EXIT_FAILS if has_truth and report.fails else EXIT_OK


def cmd_grade_smt(args) -> int:
    from .grading import MarkingScheme, ResponseRecord, read_corpus
    from .smt import AXIOM_SETS, grade_smt

    _need_file(args.corpus)
    _need_file(args.scheme)
    scheme = MarkingScheme.load(args.scheme)
    axioms = AXIOM_SETS[args.axioms]
    rows, fails, out = [], 0, []
    emit = Path(args.emit_dir) if args.emit_dir else None
    if emit is not None:
        emit.mkdir(parents=True, exist_ok=True)
    for rec in read_corpus(args.corpus):
        if not isinstance(rec, ResponseRecord):
            fails += 1
            rows.append(f"{'<line ' + str(rec[0]) + '>':<16} {'-':>6} {'-':>6}  FAIL ({rec[1]})")
            continue
        g = grade_smt(rec, scheme, axioms, args.solver, args.timeout_sec)
        if emit is not None:
            for k, j, doc1, doc2 in g.documents:
                for side, doc in (("a", doc1), ("b", doc2)):
                    (emit / f"{rec.student_id}-e{k}-d{j}-{side}.smt2").write_text(doc)
        failed = args.solver is not None and rec.ground_truth_mark is not None and g.mark != rec.ground_truth_mark
        fails += failed
        truth = "-" if rec.ground_truth_mark is None else str(rec.ground_truth_mark)
        status = "FAIL" if failed else ("unknown" if g.unknown and args.solver is None else "ok")
        if g.flags and args.solver is not None:
            status += f" ({len(g.flags)} undecided)"
        rows.append(f"{rec.student_id:<16} {str(g.mark):>6} {truth:>6}  {status}")
        out.append({"student_id": rec.student_id, "mark": str(g.mark), "failed": failed, "flags": [list(f[:2]) + [list(f[2])] for f in g.flags]})
    print(f"{'student':<16} {'mark':>6} {'truth':>6}  status")
    print("\n".join(rows))
    print(f"fails: {fails}/{len(rows)}" + ("" if args.solver else "  (no solver: emission only)"))
    if args.report:
        _write_json(args.report, {"question_id": scheme.question_id, "axioms": args.axioms, "fails": fails, "grades": out})
    return EXIT_FAILS if fails else EXIT_OK


def cmd_analyze(args) -> int:
    from .awpo import OrderingContext
    from .termination import analyze_system, emit_obligations

    system = _load_system(args.system)
    ctx = None
    if args.solver:
        ctx = (system.ordering or OrderingContext()).with_(solver_cmd=args.solver)
    analysis = analyze_system(system, ctx, spot_trials=max(0, args.spot_trials))
    for rep in analysis.orientedness:
        note = f"  {rep.note}" if rep.note else ""
        print(f"{rep.rule_id:<10} {rep.verdict}{note}")
    print(analysis.summary())
    if args.emit_obligations:
        for path in emit_obligations(analysis, args.emit_obligations):
            print(f"wrote {path}", file=sys.stderr)
    if args.report:
        _write_json(args.report, analysis.to_dict())
        from .plotting import analysis_figure

        analysis_figure(analysis, Path(args.report).with_suffix(".png"))
    return EXIT_OK


def cmd_confluence(args) -> int:
    from .confluence import analyze_confluence

    system = _load_system(args.system)
    other = _load_system(args.other) if args.other else None
    report = analyze_confluence(system, other)
    print(report.summary())
    if args.report:
        _write_json(args.report, report.to_dict())
    return EXIT_OK


_COMMANDS = {
    "normalize": cmd_normalize,
    "equal": cmd_equal,
    "grade": cmd_grade,
    "grade-smt": cmd_grade_smt,
    "analyze": cmd_analyze,
    "confluence": cmd_confluence,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        logging.getLogger(__name__).debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
