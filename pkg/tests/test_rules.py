import pytest

from physrewrite.rules import (
    EXPECTED_COUNTS,
    QUOTE_BOUNDARY_RULES,
    SYSTEM_NAMES,
    HostPred,
    builtin_system,
    check_admissible,
    load_rule_file,
    parse_rule,
    soundness_fuzz,
)
from physrewrite.terms import Num, Param, Var

ALL_RULES = [(n, r) for n in SYSTEM_NAMES for r in builtin_system(n)]


@pytest.mark.parametrize("name", SYSTEM_NAMES)
def test_rule_counts(name):
    assert len(builtin_system(name)) == EXPECTED_COUNTS[name]


def test_unique_ids():
    ids = [r.id for _, r in ALL_RULES]
    assert len(ids) == len(set(ids))


def test_unknown_system():
    with pytest.raises(KeyError):
        builtin_system("Nope")


@pytest.mark.parametrize("name,rule", ALL_RULES, ids=[r.id for _, r in ALL_RULES])
def test_admissible(name, rule):
    violations = check_admissible(rule)
    if rule.id in QUOTE_BOUNDARY_RULES:
        assert [v.clause for v in violations] == ["i"]
    else:
        assert violations == [], [str(v) for v in violations]


@pytest.mark.parametrize("name,rule", ALL_RULES, ids=[r.id for _, r in ALL_RULES])
def test_sound_on_random_instances(name, rule):
    report = soundness_fuzz(rule, trials=300, seed=1)
    assert report, (report.counterexample, report.lhs_value, report.rhs_value)


def test_fuzz_catches_a_broken_rule():
    bad = parse_rule("bad: x + y -> x * y", ["x", "y"])
    report = soundness_fuzz(bad, trials=100)
    assert not report
    cx = report.counterexample
    assert abs(cx["x"] + cx["y"] - cx["x"] * cx["y"]) > 1e-6


def test_fuzz_rejects_zero_trials():
    with pytest.raises(ValueError):
        soundness_fuzz(builtin_system("Simp").rule("S1"), trials=0)


@pytest.mark.parametrize(
    "text,clause",
    [
        ("r: f([x]) -> x", "i"),
        ("r: [x + y] -> [x] + [y]", "ii"),
        ("r: [x] * y -> [x * y]", "i"),
        ("r: [x] -> [x + p]", "iii"),
    ],
)
def test_inadmissible_examples(text, clause):
    from physrewrite.terms import declare_symbol

    declare_symbol("f", 1)
    rule = parse_rule(text, ["x", "y"])
    assert clause in {v.clause for v in check_admissible(rule)}


def test_quoted_left_vars_become_background():
    rule = parse_rule("r: [x] + y -> y + [x] | y > x", ["x", "y"])
    assert Var("x", background=True) in {c.x for c in rule.order_constraints} | {c.y for c in rule.order_constraints}
    assert rule.order_constraints[0].x == Var("y")


def test_right_side_needs_left_variables():
    with pytest.raises(ValueError):
        parse_rule("r: x -> x + y", ["x", "y"])


def test_bad_constraint():
    with pytest.raises(ValueError):
        parse_rule("r: x -> x | x >= y", ["x", "y"])


def test_host_predicates():
    n = Var("n")
    assert HostPred("is_int_geq0", n).holds(Num(3))
    assert not HostPred("is_int_geq0", n).holds(Num(-1))
    assert HostPred("not_int_geq0", n).holds(Param("p"))
    assert HostPred("gt0", n).holds(Num(2)) and not HostPred("gt0", n).holds(Num(0))
    with pytest.raises(ValueError):
        HostPred("is_prime", n)


def test_rule_file(tmp_path):
    path = tmp_path / "mine.rules"
    path.write_text(
        "# a toy system\n"
        "vars: x y; funs: f/1\n"
        "F1: f(x + y) -> f(x) + f(y)\n"
        "\n"
        "F2: f([x]) -> [x] | \n"
    )
    system = load_rule_file(path)
    assert system.name == "mine" and len(system) == 2
    assert system.rule("F1").lhs.fun == "f"


def test_rule_file_reports_line(tmp_path):
    path = tmp_path / "broken.rules"
    path.write_text("vars: x\nG: x => x\n")
    with pytest.raises(ValueError, match=":2:"):
        load_rule_file(path)
