import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from compactfd.errors import (
    DomainError,
    ExprError,
    ExprSyntaxError,
    MissingVariableError,
    UnknownIdentifierError,
)
from compactfd.expr import compile_expr, evaluate, free_variables, parse, to_source


def ev(src, **env):
    return evaluate(parse(src), env)


def test_parse_examples():
    assert ev("exp(x-2*y)*cos(8*x+4*y)", x=0, y=0) == 1.0
    assert ev("1/(3+sin(4*x)*cos(4*y))", x=0, y=0) == 1 / 3
    assert ev("2+sin(u)", u=0) == 2.0


def test_eval_examples():
    assert ev("x^2+2*y^2+4*z^2", x=1, y=1, z=1) == 7.0
    assert ev("cos(x+y-z)", x=0, y=0, z=0) == 1.0
    assert ev("sin(100*x)*sin(100*y)*exp(t)", x=math.pi / 200, y=math.pi / 200, t=0) == pytest.approx(1.0, abs=1e-15)


def test_precedence():
    assert ev("2+3*4") == 14
    assert ev("-2^2") == -4
    assert ev("2^3^2") == 512
    assert ev("8/4/2") == 1
    assert ev("1 - 2 - 3") == -4
    assert ev("2^-1") == 0.5
    assert ev("  ( 1 +\t2 ) * 3 ") == 9


def test_scientific_literals_and_pi():
    assert ev("1e-4*exp(0)") == 1e-4
    assert ev("pi") == math.pi
    assert ev(".5 + 2.") == 2.5


def test_vectorised():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(ev("x^2 + t", x=x, t=1.0), x**2 + 1)


def test_syntax_error_offset_and_expected():
    with pytest.raises(ExprSyntaxError) as info:
        parse("1 + * 2")
    assert info.value.offset == 4
    assert "(" in info.value.expected
    with pytest.raises(ExprSyntaxError) as info:
        parse("sin(x")
    assert info.value.offset == 5
    assert info.value.expected == (")",)


def test_offset_is_in_bytes():
    with pytest.raises(ExprSyntaxError) as info:
        parse("1 + é")
    assert info.value.offset == 4
    with pytest.raises(ExprSyntaxError) as info:
        parse("é + $")
    assert info.value.offset == 0


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as info:
        parse("x + w")
    assert info.value.name == "w"
    with pytest.raises(UnknownIdentifierError):
        parse("sinh(x)")


def test_missing_variable():
    with pytest.raises(MissingVariableError):
        ev("x + y", x=1)


@pytest.mark.parametrize("src,env", [
    ("log(x)", {"x": 0.0}),
    ("log(x)", {"x": -1.0}),
    ("1/x", {"x": 0.0}),
    ("sqrt(x)", {"x": -1.0}),
    ("x^(-1)", {"x": 0.0}),
    ("x^0.5", {"x": -2.0}),
    ("exp(x)", {"x": 1000.0}),
])
def test_domain_errors_not_nan(src, env):
    with pytest.raises(DomainError):
        ev(src, **env)


def test_free_variables_and_compile():
    assert free_variables(parse("sin(x)*t + pi")) == {"x", "t"}
    f = compile_expr("x*y + 1")
    assert f(x=2, y=3) == 7


def test_deterministic():
    e = parse("exp(sin(x)*cos(y)) / (1 + x^2)")
    vals = {"x": 0.37, "y": -1.2}
    assert evaluate(e, vals) == evaluate(e, vals)


@given(st.binary(max_size=40))
def test_parser_never_panics_on_bytes(data):
    try:
        parse(data)
    except ExprError:
        pass


@given(st.text(alphabet="xyzt0123456789.+-*/^() sincoexplgqrtabu", max_size=30))
def test_parser_never_panics_on_text(src):
    try:
        parse(src)
    except ExprError:
        pass


_LEAF = st.one_of(
    st.sampled_from(["x", "y", "z", "t", "u"]),
    st.floats(0.1, 9.0, allow_nan=False).map(lambda v: f"{v:.3f}"),
)


def _compose(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*"), children).map(lambda p: f"({p[0]}{p[1]}{p[2]})"),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "abs"]), children).map(lambda p: f"{p[0]}({p[1]})"),
        children.map(lambda c: f"-{c}"),
        children.map(lambda c: f"({c})^2"),
    )


_EXPRS = st.recursive(_LEAF, _compose, max_leaves=8)


@given(_EXPRS, st.lists(st.floats(-1.0, 1.0), min_size=5, max_size=5))
def test_print_parse_roundtrip(src, point):
    e = parse(src)
    e2 = parse(to_source(e))
    rng = np.random.default_rng(abs(hash(src)) % 2**32)
    pts = rng.uniform(-1, 1, size=(100, 5))
    pts[0] = point
    env = {k: pts[:, i] for i, k in enumerate("xyztu")}
    try:
        v1 = evaluate(e, env)
    except DomainError:
        with pytest.raises(DomainError):
            evaluate(e2, env)
        return
    np.testing.assert_array_equal(v1, evaluate(e2, env))
