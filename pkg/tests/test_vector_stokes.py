import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from siacalc.cubes import IDENTITY_CUBES, FiniteCube, Germ, boundary_finite
from siacalc.errors import DegenerateParametrizationError, DimensionError
from siacalc.forms import (
    CoordForm,
    exterior_derivative_sia,
    integrate_form,
    one_form_from_field,
    parse_form,
    two_form_from_field,
)
from siacalc.selftest import random_poly_cube, random_poly_form
from siacalc.stokes import ftc_case, verify_generalized_stokes
from siacalc.vector import curl_div, line_integral, surface_integral, verify_classical

SQUARE = IDENTITY_CUBES["square_z0"]
CUBE = IDENTITY_CUBES["identity3"]


def sphere_cap(theta_max):
    t = f"({theta_max!r}*u)"
    return FiniteCube.of([f"sin{t}*cos(2*pi*v)", f"sin{t}*sin(2*pi*v)", f"cos{t}"], 2)


def grad_field(phi):
    """Gradient components written out by hand for the fields below."""
    return {
        "x*y*z": ["y*z", "x*z", "x*y"],
        "x^2*y + z": ["2*x*y", "x^2", "1"],
        "sin(x)*exp(y) + z^2": ["cos(x)*exp(y)", "sin(x)*exp(y)", "2*z"],
    }[phi]


# -- line and surface integrals

def test_line_integral_examples():
    assert line_integral(["1", "0", "0"], FiniteCube.of(["t", "0", "0"], 1)) == pytest.approx(1.0)
    assert line_integral(["-y", "x", "0"], boundary_finite(SQUARE)) == pytest.approx(2.0, rel=1e-13)
    loop = FiniteCube.of(["cos(2*pi*t)", "sin(2*pi*t)", "0.3*sin(4*pi*t)"], 1)
    assert abs(line_integral(grad_field("x*y*z"), loop)) <= 1e-12


def test_surface_integral_examples():
    assert surface_integral("scalar", "1", SQUARE) == pytest.approx(1.0)
    assert surface_integral("flux", ["0", "0", "1"], SQUARE) == pytest.approx(1.0)
    th = math.pi / 2
    assert surface_integral("scalar", "1", sphere_cap(th)) == pytest.approx(2 * math.pi * (1 - math.cos(th)), rel=1e-12)
    th = 1.1
    assert surface_integral("scalar", "1", sphere_cap(th)) == pytest.approx(2 * math.pi * (1 - math.cos(th)), rel=1e-12)


def test_surface_integral_degenerate():
    pinched = FiniteCube.of(["u*v", "u*v", "0"], 2)
    with pytest.raises(DegenerateParametrizationError):
        surface_integral("scalar", "1", pinched)


def test_wrong_dimensions():
    with pytest.raises(DimensionError):
        line_integral(["1", "0", "0"], SQUARE)
    with pytest.raises(DimensionError):
        curl_div(["x", "y"], [0, 0, 0])


def test_curl_div_examples():
    c, d = curl_div(["-y", "x", "0"], [0.3, -1.0, 2.0])
    assert list(c) == [0.0, 0.0, 2.0] and d == 0.0
    c, d = curl_div(["x", "y", "z"], [1.0, 2.0, 3.0])
    assert list(c) == [0.0, 0.0, 0.0] and d == 3.0
    c, _ = curl_div(grad_field("x^2*y + z"), [0.4, 1.3, -0.2])
    assert np.all(c == 0.0)


# -- classical theorems

def test_classical_examples():
    lhs, rhs, gap = verify_classical("stokes", ["-y", "x", "0"], SQUARE)
    assert lhs == pytest.approx(2.0) and rhs == pytest.approx(2.0) and gap <= 1e-12
    lhs, rhs, gap = verify_classical("divergence", ["x", "y", "z"], CUBE)
    assert lhs == pytest.approx(3.0) and rhs == pytest.approx(3.0)


@pytest.mark.parametrize("phi", ["x*y*z", "x^2*y + z", "sin(x)*exp(y) + z^2"])
def test_gradient_fields_have_no_circulation(phi):
    lhs, rhs, _ = verify_classical("stokes", grad_field(phi), sphere_cap(1.2))
    assert abs(lhs) <= 1e-9 and abs(rhs) <= 1e-9


def test_classical_stokes_matches_generalized():
    F = ["y*z^2", "x*exp(z)", "x*y"]
    S = FiniteCube.of(["u", "v", "u^2 - v^2"], 2)
    classical = verify_classical("stokes", F, S)
    general = verify_generalized_stokes(one_form_from_field(F), S)
    assert abs(classical.lhs - general.rhs) <= 1e-9
    assert abs(classical.rhs - general.lhs) <= 1e-9
    assert abs(classical.gap - general.gap) <= 1e-9


def test_flux_form_matches_surface_flux():
    F = ["x*z", "y^2", "sin(x)"]
    S = FiniteCube.of(["u", "v", "u*v"], 2)
    assert integrate_form(two_form_from_field(F), S) == pytest.approx(surface_integral("flux", F, S), rel=1e-12)


# -- generalized Stokes and FTC

def test_generalized_examples():
    F = CoordForm(0, 1, (("x^3 - 2*x", ()),))
    lhs, rhs, gap = verify_generalized_stokes(F, IDENTITY_CUBES["identity1"])
    assert lhs == pytest.approx(-1.0) and gap <= 1e-12
    lhs, rhs, gap = verify_generalized_stokes(parse_form("-y*dx + x*dy"), IDENTITY_CUBES["identity2"])
    assert lhs == pytest.approx(2.0) and rhs == pytest.approx(2.0) and gap <= 1e-9
    lhs, rhs, gap = verify_generalized_stokes(CoordForm.zero(1, 2), IDENTITY_CUBES["identity2"])
    assert (lhs, rhs, gap) == (0.0, 0.0, 0.0)


def test_generalized_dimension_check():
    with pytest.raises(DimensionError):
        verify_generalized_stokes(parse_form("x*dy"), IDENTITY_CUBES["identity3"])


@given(st.integers(0, 2**32 - 1))
def test_generalized_polynomial_property(seed):
    rng = np.random.default_rng(seed)
    deg = seed % 3
    m = int(rng.integers(deg + 1, 4))
    w = random_poly_form(rng, deg, m)
    M = random_poly_cube(rng, deg + 1, m)
    assert verify_generalized_stokes(w, M).gap <= 1e-8


def test_ftc_examples():
    rep = ftc_case("x^2/2")
    assert rep.integral == pytest.approx(0.5) and rep.difference == pytest.approx(0.5)
    rep = ftc_case("sin(x)")
    assert rep.integral == pytest.approx(math.sin(1.0), rel=1e-14) and rep.gap <= 1e-12
    assert rep.germ_gap <= 1e-12 and len(rep.germs) == 20


def test_ftc_germ_value():
    w = CoordForm(0, 1, (("exp(x)", ()),))
    got = exterior_derivative_sia(w, Germ.affine([0.3], [[1.7]]))
    assert got == pytest.approx(math.exp(0.3) * 1.7, rel=1e-15)
