import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from siacalc.calculus import (
    Antiderivative,
    constrained_stationary,
    derivative,
    find_stationary,
    gradient,
    hessian,
    integrate,
    nth_derivative,
    verify_constrained,
)
from siacalc.errors import (
    ConvergenceError,
    DegenerateConstraintError,
    DimensionError,
    DomainError,
    SolverError,
)
from siacalc.expr import parse
from siacalc.nilpotent import MicroVector
from siacalc.quadrature import QuadratureConfig


def richardson(f, x, h=1e-2):
    """Central differences with two Richardson steps: an oracle independent of the algebra."""
    d = lambda h: (f(x + h) - f(x - h)) / (2 * h)
    d1, d2, d3 = d(h), d(h / 2), d(h / 4)
    r1, r2 = (4 * d2 - d1) / 3, (4 * d3 - d2) / 3
    return (16 * r2 - r1) / 15


# -- derivative

def test_derivative_examples():
    assert derivative("x^2", "x", 3.0) == 6.0
    assert derivative("sin(x)", "x", 0.0) == 1.0
    want = math.sin(1.3) + 1.3 * math.cos(1.3)
    assert derivative("x*sin(x)", "x", 1.3) == pytest.approx(want, rel=1e-15)
    assert abs(derivative("x*sin(x)", "x", 1.3) - richardson(lambda t: t * math.sin(t), 1.3)) < 1e-8


def test_derivative_domain_error():
    with pytest.raises(DomainError):
        derivative("log(x)", "x", -1.0)


def test_nth_derivative_examples():
    assert nth_derivative("x^3", "x", 2.0, 2) == 12.0
    assert nth_derivative("cosh(x)", "x", 0.0, 2) == 1.0
    got = nth_derivative("exp(2*x)", "x", 0.5, 3)
    assert got == pytest.approx(8 * math.e, rel=1e-14)
    fd = richardson(lambda t: nth_derivative("exp(2*x)", "x", t, 2), 0.5)
    assert abs(got - fd) < 1e-6
    with pytest.raises(DimensionError):
        nth_derivative("x", "x", 0.0, 9)


def test_gradient_examples():
    assert list(gradient("x^2*y", ("x", "y"), (1.0, 2.0))) == [4.0, 1.0]
    r, h = 1.7, 0.4
    g = gradient("2*pi*r*h + 2*pi*r^2", ("r", "h"), (r, h))
    assert np.allclose(g, [2 * math.pi * (h + 2 * r), 2 * math.pi * r], rtol=1e-15)
    g = gradient("sin(x*y)", ("x", "y"), (0.7, 1.1))
    assert np.allclose(g, [1.1 * math.cos(0.77), 0.7 * math.cos(0.77)], rtol=1e-14)
    fx = richardson(lambda t: math.sin(t * 1.1), 0.7)
    assert abs(g[0] - fx) < 1e-8


def test_hessian_mixed_partials():
    H = hessian("x^2*y + sin(y)", ("x", "y"), (1.0, 0.5))
    assert np.allclose(H, [[1.0, 2.0], [2.0, -math.sin(0.5)]], atol=1e-15)


# -- integrate

def test_integrate_examples():
    assert integrate("x^2", "x", 0.0, 1.0) == pytest.approx(1 / 3, rel=1e-14)
    assert integrate("sin(t)", "t", 0.0, math.pi) == pytest.approx(2.0, rel=1e-13)
    # series oracle: sum (-1)^k / (k! (2k+1))
    series = math.fsum((-1) ** k / (math.factorial(k) * (2 * k + 1)) for k in range(30))
    assert integrate("exp(-t^2)", "t", 0.0, 1.0) == pytest.approx(series, rel=1e-13)


def test_integrate_orientation_and_linearity():
    a = integrate("cos(x)*x", "x", 0.2, 1.4)
    assert integrate("cos(x)*x", "x", 1.4, 0.2) == pytest.approx(-a, rel=1e-14)
    b = integrate("exp(x)", "x", 0.2, 1.4)
    assert integrate("3*cos(x)*x - exp(x)", "x", 0.2, 1.4) == pytest.approx(3 * a - b, rel=1e-12)


def test_integrate_budget():
    cfg = QuadratureConfig(rel_tol=1e-15, abs_tol=1e-300, max_subdivisions=4)
    with pytest.raises(ConvergenceError):
        integrate("sqrt(x)", "x", 0.0, 1.0, cfg)


@pytest.mark.parametrize("f", ["sin(3*x)*exp(x)", "1/(1 + x^2)", "x^5 - x"])
def test_tolerance_halving_invariance(f):
    base = integrate(f, "x", -0.5, 2.0)
    tight = integrate(f, "x", -0.5, 2.0, QuadratureConfig().tightened())
    assert abs(base - tight) <= 1e-9


@given(st.floats(0.1, 2.5))
def test_antiderivative_round_trip(x):
    F = Antiderivative("cos(t)*exp(t/3)", "t")
    assert derivative(F, "x", x) == pytest.approx(math.cos(x) * math.exp(x / 3), abs=1e-8)
    assert F(x) == pytest.approx(integrate("cos(t)*exp(t/3)", "t", 0.0, x), abs=1e-12)


# -- stationary points

def test_find_stationary_examples():
    assert np.allclose(find_stationary("(x-1)^2 + (y+2)^2", ("x", "y"), (0.0, 0.0)), [1, -2])
    assert find_stationary("x^2 - x", ("x",), (0.0,))[0] == pytest.approx(0.5)
    assert find_stationary("cos(x)", ("x",), (3.0,))[0] == pytest.approx(math.pi, abs=1e-12)


def test_find_stationary_literal_definition():
    f = parse("x^4 + y^2 - x*y + exp(x)")
    p = find_stationary(f, ("x", "y"), (0.0, 0.0))
    out = f.evaluate({"x": MicroVector.seed(p, 0), "y": MicroVector.seed(p, 1)})
    assert np.max(np.abs(out.grad)) <= 1e-10


def test_find_stationary_singular():
    with pytest.raises(SolverError):
        find_stationary("x + y", ("x", "y"), (0.0, 0.0))


CAN_F, CAN_G = "2*pi*r*h + 2*pi*r^2", "pi*r^2*h"


@pytest.mark.parametrize("guess", [(1.0, 1.0), (3.0, 0.5)])
def test_can_problem(guess):
    (r, h), lam = constrained_stationary(CAN_F, CAN_G, 16 * math.pi, ("r", "h"), guess)
    assert abs(r - 2) < 1e-10 and abs(h - 4) < 1e-10
    assert abs(h - 2 * r) <= 1e-8
    assert lam == pytest.approx(1.0)
    assert verify_constrained(CAN_F, CAN_G, (r, h))


def test_constrained_examples():
    p, lam = constrained_stationary("x + y", "x^2 + y^2", 2.0, ("x", "y"), (1.0, 0.5))
    assert np.allclose(p, [1, 1]) and lam == pytest.approx(0.5)
    p, lam = constrained_stationary("x", "x", 3.0, ("x",), (0.0,))
    assert p[0] == pytest.approx(3.0) and lam == pytest.approx(1.0)


def test_verify_constrained_examples():
    assert not verify_constrained(CAN_F, CAN_G, (1.0, 1.0))
    for r in (0.5, 1.0, 3.0):
        assert verify_constrained(CAN_F, CAN_G, (r, 2 * r))
    assert verify_constrained("x^2 + y", "x^2 + y", (0.3, -1.0))


def test_degenerate_constraint():
    with pytest.raises(DegenerateConstraintError):
        constrained_stationary("x + y", "x^2 + y^2", 1.0, ("x", "y"), (0.0, 0.0))
    with pytest.raises(DegenerateConstraintError):
        verify_constrained("x", "x^2 + y^2", (0.0, 0.0))


@given(st.floats(0.5, 3.0), st.floats(0.5, 3.0))
def test_constrained_output_verifies(a, b):
    f, g = f"{a!r}*x + {b!r}*y", "x^2 + y^2"
    p, _ = constrained_stationary(f, g, 1.0, ("x", "y"), (1.0, 1.0))
    assert verify_constrained(f, g, p)
    assert np.allclose(p, np.array([a, b]) / math.hypot(a, b))
