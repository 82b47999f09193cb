"""Weight-expression language: parsing, evaluation, formatting, compilation."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpn.errors import (
    DivisionByZeroError,
    ExprSyntaxError,
    MalformedNumberError,
    NegativeSqrtError,
    NonFiniteResultError,
    UnknownFunctionError,
    UnknownPlaceError,
)
from qpn.expr import (
    Add,
    Constant,
    Cos,
    Divide,
    MarkRef,
    Multiply,
    Negate,
    Pi,
    Power,
    Sin,
    Sqrt,
    Subtract,
    compile_fn,
    evaluate,
    format_expr,
    free_places,
    parse,
)


class TestParse:
    def test_inverse_sqrt(self):
        assert parse("1/sqrt(3)") == Divide(Constant(1.0), Sqrt(Constant(3.0)))

    def test_marking_dependent_angle(self):
        tree = parse("cos(pi/(2*m(p9)))*m(p2)")
        assert tree == Multiply(
            Cos(Divide(Pi(), Multiply(Constant(2.0), MarkRef("p9")))), MarkRef("p2")
        )
        assert free_places(tree) == {"p9", "p2"}

    def test_subtraction(self):
        assert parse("m(p9)-2") == Subtract(MarkRef("p9"), Constant(2.0))

    def test_whitespace_insensitive(self):
        assert parse(" m( p9 )\t-  2 ") == parse("m(p9)-2")

    def test_precedence(self):
        assert parse("1+2*3") == Add(Constant(1.0), Multiply(Constant(2.0), Constant(3.0)))
        assert parse("2*3+1") == Add(Multiply(Constant(2.0), Constant(3.0)), Constant(1.0))

    def test_left_associative_subtraction(self):
        assert parse("5-2-1") == Subtract(Subtract(Constant(5.0), Constant(2.0)), Constant(1.0))

    def test_power_right_associative(self):
        assert parse("2^3^2") == Power(Constant(2.0), Power(Constant(3.0), Constant(2.0)))
        assert evaluate(parse("2^3^2"), {}) == 512.0

    def test_unary_minus(self):
        assert parse("-m(p1)") == Negate(MarkRef("p1"))
        assert parse("--2") == Negate(Negate(Constant(2.0)))
        assert parse("2*-3") == Multiply(Constant(2.0), Negate(Constant(3.0)))

    def test_scientific_notation(self):
        assert parse("1e-28") == Constant(1e-28)
        assert parse("1e+14") == Constant(1e14)
        assert parse("2.5E3") == Constant(2500.0)

    def test_no_implicit_multiplication(self):
        with pytest.raises(ExprSyntaxError):
            parse("2m(p9)")

    def test_unknown_function(self):
        with pytest.raises(UnknownFunctionError):
            parse("tan(1)")

    def test_bare_identifier(self):
        with pytest.raises(ExprSyntaxError):
            parse("cos")
        with pytest.raises(ExprSyntaxError):
            parse("p9")

    def test_malformed_number(self):
        with pytest.raises(MalformedNumberError):
            parse("1.2.3")
        with pytest.raises(MalformedNumberError):
            parse("1e")

    def test_error_position(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse("1 + ")
        assert err.value.line == 1
        assert err.value.column == 5

    def test_unbalanced_paren(self):
        with pytest.raises(ExprSyntaxError):
            parse("cos(1")

    def test_empty(self):
        with pytest.raises(ExprSyntaxError):
            parse("")


class TestEvaluate:
    def test_inverse_sqrt_value(self):
        assert evaluate(parse("1/sqrt(3)"), {}) == pytest.approx(0.5773503, abs=1e-6)

    def test_cos_quarter_pi(self):
        assert evaluate(parse("cos(pi/(2*m(p9)))"), {"p9": 2.0}) == pytest.approx(
            0.7071068, abs=1e-6
        )

    def test_mark_read(self):
        assert evaluate(parse("m(p2)"), {"p2": 0.0}) == 0.0

    def test_unknown_place(self):
        with pytest.raises(UnknownPlaceError):
            evaluate(parse("m(p7)"), {"p2": 1.0})

    def test_division_by_zero(self):
        with pytest.raises(DivisionByZeroError):
            evaluate(parse("1/m(p1)"), {"p1": 0.0})

    def test_negative_sqrt(self):
        with pytest.raises(NegativeSqrtError):
            evaluate(parse("sqrt(m(p1))"), {"p1": -1.0})

    def test_overflow(self):
        with pytest.raises(NonFiniteResultError):
            evaluate(parse("1e300*1e300"), {})

    def test_reference_precision(self):
        # the weight expressions used by the bundled nets, against direct math
        cases = [
            ("1/sqrt(3)", {}, 1.0 / math.sqrt(3.0)),
            ("cos(pi/(2*m(p9)))*m(p2)", {"p9": 4.0, "p2": 0.5}, math.cos(math.pi / 8) * 0.5),
            ("sin(pi/(2*m(p9)))*m(p2)", {"p9": 4.0, "p2": 0.5}, math.sin(math.pi / 8) * 0.5),
            ("m(p9)-2", {"p9": 7.0}, 5.0),
            (
                "cos(pi/(2*25))*m(p2)-sin(pi/(2*25))*m(p21)",
                {"p2": 0.25, "p21": -0.5},
                math.cos(math.pi / 50) * 0.25 + math.sin(math.pi / 50) * 0.5,
            ),
            ("sin(pi/(2*320))^2*m(p21)^2", {"p21": 3.0}, math.sin(math.pi / 640) ** 2 * 9.0),
        ]
        for text, env, expected in cases:
            assert evaluate(parse(text), env) == pytest.approx(expected, abs=1e-12)

    def test_purity(self):
        tree = parse("cos(m(p1))+m(p2)^2")
        env = {"p1": 0.3, "p2": -1.7}
        assert evaluate(tree, env) == evaluate(tree, env)


class TestFreePlaces:
    def test_collects_references(self):
        assert free_places(parse("cos(pi/(2*m(p9)))*m(p2)")) == {"p9", "p2"}

    def test_constant_has_none(self):
        assert free_places(parse("3.5")) == frozenset()

    def test_set_semantics(self):
        assert free_places(parse("m(p1)+m(p1)")) == {"p1"}


class TestFormat:
    def test_examples(self):
        assert format_expr(parse("1/sqrt(3)")) == "1/sqrt(3)"
        assert format_expr(parse(" m( p9 ) - 2 ")) == "m(p9)-2"
        assert format_expr(parse("-(m(p1))")) == "-m(p1)"

    def test_parenthesization(self):
        assert format_expr(parse("(1+2)*3")) == "(1+2)*3"
        assert format_expr(parse("1+2*3")) == "1+2*3"
        assert format_expr(parse("-(1+2)")) == "-(1+2)"
        assert format_expr(parse("2^(3^2)")) == "2^3^2"
        assert format_expr(parse("(2^3)^2")) == "(2^3)^2"
        assert format_expr(parse("1-(2-3)")) == "1-(2-3)"


# --- property tests -------------------------------------------------------------

_PLACES = ("p1", "p2", "p9", "p21", "q_x")


def _exprs(depth: int = 3):
    leaves = st.one_of(
        st.floats(min_value=0.0, max_value=1e6, allow_nan=False).map(
            lambda v: Constant(round(v, 6))
        ),
        st.integers(min_value=0, max_value=99).map(lambda v: Constant(float(v))),
        st.just(Pi()),
        st.sampled_from(_PLACES).map(MarkRef),
    )

    def extend(children):
        return st.one_of(
            st.tuples(children, children).map(lambda ab: Add(*ab)),
            st.tuples(children, children).map(lambda ab: Subtract(*ab)),
            st.tuples(children, children).map(lambda ab: Multiply(*ab)),
            st.tuples(children, children).map(lambda ab: Divide(*ab)),
            st.tuples(children, children).map(lambda ab: Power(*ab)),
            children.map(Negate),
            children.map(Cos),
            children.map(Sin),
            children.map(Sqrt),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(_exprs())
def test_format_parse_round_trip(tree):
    assert parse(format_expr(tree)) == tree


@settings(max_examples=300, deadline=None)
@given(
    _exprs(),
    st.lists(
        st.floats(min_value=-100.0, max_value=100.0, allow_nan=False),
        min_size=len(_PLACES),
        max_size=len(_PLACES),
    ),
)
def test_compiled_matches_tree_walk(tree, values):
    """The generated-code evaluator agrees with the reference tree walk."""
    env = dict(zip(_PLACES, values))
    index = {p: i for i, p in enumerate(_PLACES)}
    marking = [env[p] for p in _PLACES]
    fn = compile_fn(tree, index)
    try:
        expected = evaluate(tree, env)
    except Exception:
        with pytest.raises(Exception):
            value = fn(marking)
            if not math.isfinite(value):
                raise NonFiniteResultError(str(value))
        return
    assert fn(marking) == pytest.approx(expected, rel=1e-15, abs=1e-300)
