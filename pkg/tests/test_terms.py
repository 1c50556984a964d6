import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_match
from physrewrite.matching import match, unify
from physrewrite.parser import ParseError, parse_equation, parse_expr
from physrewrite.printer import to_text
from physrewrite.terms import (
    App,
    ArityError,
    InvalidPosition,
    Num,
    Param,
    Quote,
    Var,
    apply_subst,
    bg,
    fg,
    is_ground,
    positions_of,
    replace_at,
    subterm_at,
    vars_of,
)
from strategies import ground_terms, rule_terms

x, y, z = Var("x"), Var("y"), Var("z")


def add(a, b):
    return App("+", (a, b))


def mul(a, b):
    return App("*", (a, b))


class TestParse:
    def test_kinetic_energy_shape(self):
        t = parse_expr("m_1*v_0^2/2")
        assert t == App("/", (mul(Param("m_1"), App("^", (Param("v_0"), Num(2)))), Num(2)))

    def test_declared_variable(self):
        assert parse_expr("x", {"x": fg("x")}) == Var("x")

    def test_complementary_angle(self):
        t = parse_expr("sin(pi/2 - phi)")
        assert t == App("sin", (App("-", (App("/", (Param("pi"), Num(2))), Param("phi"))),))

    def test_param_names_are_normalized(self):
        assert parse_expr("m1") == Param("m_1") == parse_expr("m_1")

    def test_decimal_literals_are_exact(self):
        assert parse_expr("0.5") == Num("1/2")

    def test_power_is_right_associative(self):
        a, b, c = Param("a"), Param("b"), Param("c")
        assert parse_expr("a^b^c") == App("^", (a, App("^", (b, c))))
        assert parse_expr("a**b") == App("^", (a, b))

    def test_minus_is_left_associative(self):
        a, b, c = Param("a"), Param("b"), Param("c")
        assert parse_expr("a-b-c") == App("-", (App("-", (a, b)), c))

    def test_equation_forms(self):
        assert parse_equation("Eq(m_1*v_0, p_0)") == parse_equation("m1*v0 = p0")

    @pytest.mark.parametrize("bad,offset", [("2*+", 2), ("(a+b", 4), ("a $ b", 2)])
    def test_syntax_error_offset(self, bad, offset):
        with pytest.raises(ParseError) as info:
            parse_expr(bad)
        assert info.value.offset == offset

    def test_arity_error(self):
        with pytest.raises(ArityError):
            parse_expr("sin(a, b)")

    @given(ground_terms())
    def test_print_parse_round_trip(self, t):
        assert parse_expr(to_text(t)) == t

    def test_quote_brackets_round_trip(self):
        t = parse_expr("[1 + 1]*a")
        assert t == mul(Quote(add(Num(1), Num(1))), Param("a"))
        assert parse_expr(to_text(t)) == t


class TestSubstitution:
    def test_quotes_of_variables(self):
        assert apply_subst(add(x, y), {x: Quote(Num(1)), y: Quote(Num(2))}) == add(Quote(Num(1)), Quote(Num(2)))

    def test_empty(self):
        assert apply_subst(x, {}) == x

    def test_inside_quotes(self):
        a, b = bg("a"), bg("b")
        got = apply_subst(add(Quote(a), Quote(b)), {a: Num(1), b: Num(2)})
        assert got == add(Quote(Num(1)), Quote(Num(2)))

    @given(rule_terms(), rule_terms(), rule_terms())
    def test_idempotent_on_ground_ranges(self, t, s1, s2):
        sigma = {x: apply_subst(s1, {x: Param("a"), y: Param("b"), z: Param("a")}), y: Param("b")}
        once = apply_subst(t, sigma)
        assert apply_subst(once, sigma) == once


class TestMatch:
    def test_quote_pattern_binds_inner(self):
        a, b = bg("a"), bg("b")
        sigma = match(add(Quote(a), Quote(b)), add(Quote(Num(1)), Quote(Num(2))))
        assert sigma == {a: Num(1), b: Num(2)}

    def test_variable_pattern(self):
        s = mul(Param("p"), Num(3))
        assert match(x, s) == {x: s}

    def test_quote_literal_mismatch(self):
        assert match(add(Quote(Num(0)), x), add(Quote(Num(1)), Param("p"))) is None

    @given(rule_terms(max_leaves=4), rule_terms(max_leaves=5))
    def test_agrees_with_brute_force(self, pattern, subject):
        subject = apply_subst(subject, {x: Param("a"), y: Param("b"), z: Param("a")})
        got = match(pattern, subject)
        want = brute_match(pattern, subject)
        assert (got is None) == (want is None)
        if got is not None:
            assert apply_subst(pattern, got) == subject


class TestUnify:
    def test_first_order(self):
        a, b = Var("a"), Var("b")
        sigma = unify(add(x, y), add(mul(a, b), z))
        assert apply_subst(add(x, y), sigma) == apply_subst(add(mul(a, b), z), sigma)
        assert apply_subst(x, sigma) == mul(a, b)

    def test_occurs_check(self):
        assert unify(x, App("sin", (x,))) is None

    def test_clash(self):
        assert unify(add(x, y), mul(x, y)) is None

    @given(rule_terms(max_leaves=5), rule_terms(max_leaves=5))
    def test_soundness_and_idempotence(self, s, t):
        t = apply_subst(t, {x: Var("x2"), y: Var("y2"), z: Var("z2")})
        sigma = unify(s, t)
        if sigma is None:
            return
        assert apply_subst(s, sigma) == apply_subst(t, sigma)
        for v, u in sigma.items():
            assert apply_subst(u, sigma) == u

    @given(rule_terms(max_leaves=4), rule_terms(max_leaves=4), st.data())
    def test_most_general(self, s, t, data):
        t = apply_subst(t, {x: Var("x2"), y: Var("y2"), z: Var("z2")})
        sigma = unify(s, t)
        # any ground unifier found by brute force factors through sigma
        grounds = [Param("a"), Quote(Num(0)), add(Param("a"), Param("b"))]
        vs = sorted(vars_of(s) | vars_of(t), key=lambda v: v.name)
        if len(vs) > 4:
            return
        for combo in itertools.product(grounds, repeat=len(vs)):
            delta = dict(zip(vs, combo))
            if apply_subst(s, delta) == apply_subst(t, delta):
                assert sigma is not None
                for v in vs:
                    assert apply_subst(apply_subst(v, sigma), delta) == delta[v]


class TestPositions:
    def test_subterm(self):
        a, b, c = Param("a"), Param("b"), Param("c")
        assert subterm_at(add(a, mul(b, c)), (1,)) == mul(b, c)

    def test_root_replace(self):
        assert replace_at(add(Param("a"), Param("b")), (), Param("c")) == Param("c")

    def test_invalid_position(self):
        with pytest.raises(InvalidPosition):
            subterm_at(Param("a"), (0,))

    def test_parameters_are_ground(self):
        assert is_ground(mul(Param("m_1"), Param("v_0")))
        assert not is_ground(add(x, Param("a")))

    @given(rule_terms())
    def test_replace_own_subterm_is_identity(self, t):
        for p in positions_of(t):
            assert replace_at(t, p, subterm_at(t, p)) == t
