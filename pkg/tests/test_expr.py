import pytest
from hypothesis import given, settings, strategies as st

from diracfib import expr as ex
from diracfib.expr import (Add, ArityError, Call, Div, DslSyntaxError, Mul, Neg,
                           Num, Pow, Sub, UnknownIdentifierError, Var, parse,
                           pretty, variables)


def test_basic_ast():
    e = parse("x^2 + sin(y)", ["x", "y"])
    assert e == Add(Pow(Var("x"), 2), Call("sin", (Var("y"),)))


def test_unary_minus_binds_quotient():
    # hand-built reference AST: the leading minus captures (x*y), then / applies
    e = parse("-(x*y)/(1 + x^2)", ["x", "y"])
    want = Div(Neg(Mul(Var("x"), Var("y"))), Add(Num(1.0), Pow(Var("x"), 2)))
    assert e == want


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as err:
        parse("x*dy_coeff", ["x"])
    assert "dy_coeff" in str(err.value)


def test_unknown_function_is_reported():
    with pytest.raises(UnknownIdentifierError):
        parse("sinh(x)", ["x"])


def test_arity_mismatch():
    with pytest.raises(ArityError):
        parse("sin(x, y)", ["x", "y"])
    with pytest.raises(ArityError):
        parse("atan2(x)", ["x"])


def test_syntax_error_has_position():
    with pytest.raises(DslSyntaxError) as err:
        parse("x + \n* y", ["x", "y"])
    assert err.value.line == 2
    assert err.value.col == 1


def test_malformed_number():
    with pytest.raises(DslSyntaxError):
        parse("1.", ["x"])
    with pytest.raises(DslSyntaxError):
        parse("2e+", ["x"])


def test_scientific_number():
    e = parse("4.0e-2", [])
    assert e == Num(0.04)


def test_power_requires_integer_exponent():
    with pytest.raises(DslSyntaxError):
        parse("x^2.5", ["x"])
    assert parse("x^-2", ["x"]) == Pow(Var("x"), -2)


def test_no_implicit_multiplication():
    with pytest.raises(DslSyntaxError):
        parse("2 x", ["x"])


def test_precedence_and_associativity():
    e = parse("a - b - c", ["a", "b", "c"])
    assert e == Sub(Sub(Var("a"), Var("b")), Var("c"))
    e = parse("a / b / c", ["a", "b", "c"])
    assert e == Div(Div(Var("a"), Var("b")), Var("c"))
    e = parse("a + b * c^2", ["a", "b", "c"])
    assert e == Add(Var("a"), Mul(Var("b"), Pow(Var("c"), 2)))


def test_variables():
    e = parse("x*atan2(y, z) + 2", ["x", "y", "z"])
    assert variables(e) == {"x", "y", "z"}


def test_roundtrip_examples():
    sources = [
        "x^2 + sin(y)",
        "-(x*y)/(1 + x^2)",
        "atan2(y, x)^3 - exp(x)/(y - 2.5e-1)",
        "--x + -(y^-2)",
        "sqrt(x + 2)*cos(y)*tan(x)",
    ]
    for src in sources:
        e = parse(src, ["x", "y"])
        assert parse(pretty(e), ["x", "y"]) == e


_COORDS = ("x", "y", "z")


def _ast_strategy():
    leaves = st.one_of(
        st.floats(min_value=0.0, max_value=1e6, allow_nan=False).map(Num),
        st.sampled_from(_COORDS).map(Var),
    )

    def extend(children):
        unary = st.builds(Neg, children)
        powers = st.builds(Pow, children, st.integers(min_value=-4, max_value=4))
        binops = st.one_of(
            st.builds(Add, children, children),
            st.builds(Sub, children, children),
            st.builds(Mul, children, children),
            st.builds(Div, children, children),
        )
        calls = st.one_of(
            st.builds(lambda a, fn: Call(fn, (a,)), children,
                      st.sampled_from(["sin", "cos", "tan", "exp", "log", "sqrt"])),
            st.builds(lambda a, b: Call("atan2", (a, b)), children, children),
        )
        return st.one_of(unary, powers, binops, calls)

    return st.recursive(leaves, extend, max_leaves=25)


@settings(max_examples=200, deadline=None)
@given(_ast_strategy())
def test_pretty_parse_roundtrip_random_ast(e):
    assert parse(pretty(e), _COORDS) == e


def test_derive_roundtrips_and_matches():
    # symbolic derivative is itself printable and reparses identically
    e = parse("x*sin(y)/(1 + x^2) + atan2(y, x)", ["x", "y"])
    for name in ("x", "y"):
        d = ex.derive(e, name)
        assert parse(pretty(d), ["x", "y"]) == d
