import math
import re

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from siacalc.errors import DomainError, ExprSyntaxError, NonInvertibleError, UnboundVariableError
from siacalc.expr import BinOp, Call, Num, Pow, Var, evaluate, neg, parse, variables
from siacalc.nilpotent import MultiDual
from siacalc.primitives import PRIMITIVES


def test_can_objective_free_vars():
    assert parse("2*pi*r*h + 2*pi*r^2").free_vars() == {"pi", "r", "h"}
    assert variables(parse("2*pi*r*h + 2*pi*r^2")) == ("r", "h")


def test_catenary_tree():
    e = parse("a*cosh(x/a)")
    assert isinstance(e, BinOp) and isinstance(e.right, Call) and e.right.func == "cosh"
    assert e.free_vars() == {"a", "x"}


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("1 + * 2")
    assert info.value.offset == 4


def test_offsets_are_bytes():
    with pytest.raises(ExprSyntaxError) as info:
        parse("x + é")  # two-byte character at byte 4
    assert info.value.offset == 4
    with pytest.raises(ExprSyntaxError) as info:
        parse("é")
    assert info.value.offset == 0


@pytest.mark.parametrize("src, message", [
    ("foo(x)", "unknown primitive"),
    ("abs(x)", "non-smooth"),
    ("x^y", "literal exponent"),
    ("x^sin(1)", "literal exponent"),
    ("(x + 1", "expected ')'"),
    ("", "empty"),
    ("sin(x, y)", "one argument"),
])
def test_parse_errors(src, message):
    with pytest.raises(ExprSyntaxError, match=re.escape(message)):
        parse(src)


def test_precedence():
    assert evaluate("-x^2", {"x": 3.0}) == -9.0
    assert evaluate("2^3^2") == 512.0
    assert evaluate("2^-1") == 0.5
    assert evaluate("x**2", {"x": 4.0}) == 16.0
    assert evaluate("8/4/2") == 1.0
    assert evaluate("1 - 2 - 3") == -4.0
    assert evaluate("x^(1/2)", {"x": 9.0}) == pytest.approx(3.0)


def test_evaluate_examples():
    assert evaluate("x^2", {"x": 3.0}) == 9.0
    v = evaluate("x^2", {"x": MultiDual([3.0, 1.0])})
    assert list(v.coeffs) == [9.0, 6.0]
    with pytest.raises(NonInvertibleError):
        evaluate("1/x", {"x": MultiDual([0.0, 1.0])})


def test_constants_and_unbound():
    assert evaluate("pi") == math.pi
    assert evaluate("e") == math.e
    with pytest.raises(UnboundVariableError):
        evaluate("x + 1")


def test_vectorised_evaluation():
    xs = np.linspace(0.1, 1, 7)
    assert np.allclose(evaluate("log(x)*x", {"x": xs}), np.log(xs) * xs)


# -- random trees

NAMES = st.sampled_from(["x", "y", "z", "r", "h"])
LITERALS = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def _trees(depth):
    leaf = st.one_of(NAMES.map(Var), LITERALS.map(Num))
    if depth == 0:
        return leaf
    sub = _trees(depth - 1)
    return st.one_of(
        leaf,
        sub.map(neg),
        st.tuples(st.sampled_from("+-*/"), sub, sub).map(lambda t: BinOp(*t)),
        st.tuples(sub, st.sampled_from([-2.0, -1.0, 0.5, 2.0, 3.0, 1.5])).map(lambda t: Pow(*t)),
        st.tuples(st.sampled_from(sorted(PRIMITIVES)), sub).map(lambda t: Call(*t)),
    )


@given(_trees(6))
def test_parse_format_round_trip(e):
    assert parse(e.format()) == e


@given(_trees(3), st.floats(0.2, 2.0))
def test_standard_part_matches_real_evaluation(e, x0):
    env_r = {k: x0 + 0.1 * i for i, k in enumerate("xyzrh")}
    env_d = {k: MultiDual([v, 1.0, 0.0, 0.0], 2) for k, v in env_r.items()}
    try:
        real = e.evaluate(env_r)
    except Exception as exc:  # domain errors must agree too
        with pytest.raises(type(exc)):
            e.evaluate(env_d)
        return
    try:
        dual = e.evaluate(env_d)
    except DomainError:
        # finite value at a point where the expression is not differentiable,
        # e.g. (x - x)^0.5; the algebra refuses to lift there
        assume(False)
    std = dual.standard_part if isinstance(dual, MultiDual) else dual
    assert std == real or (math.isnan(real) and math.isnan(std))
