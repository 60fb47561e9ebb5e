import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from siacalc.cubes import IDENTITY_CUBES, FiniteCube, Germ, InfinitesimalCube, random_germ
from siacalc.errors import DimensionError, ExprSyntaxError, ImpureInfinitesimalError
from siacalc.forms import (
    CoordForm,
    eval_form,
    exterior_derivative_coord,
    exterior_derivative_sia,
    form_tilde,
    integrate_form,
    parse_form,
)
from siacalc.nilpotent import MultiDual, microcancel
from siacalc.selftest import random_poly_form


def values_at(w, point):
    return {idx: float(a) for a, idx in w.coefficients_at(point)}


# -- parsing and JSON

def test_parse_form_terms():
    w = parse_form("-y*dx + x*dy")
    assert (w.degree, w.m) == (1, 2)
    assert values_at(w, (2.0, 3.0)) == {(0,): -3.0, (1,): 2.0}


def test_parse_form_wedge_order_sign():
    w = parse_form("z*dy*dx + dx*dz")
    assert values_at(w, (0.0, 0.0, 5.0)) == {(0, 1): -5.0, (0, 2): 1.0}
    assert parse_form("x*dx*dx", m=2).terms == ()


def test_parse_form_errors():
    with pytest.raises(ExprSyntaxError):
        parse_form("x*dx + dy*dx")
    with pytest.raises(ExprSyntaxError):
        parse_form("sin(dx)")


def test_numbered_coordinates():
    w = parse_form("x4*dx1*dx2")
    assert w.m == 4 and w.coords == ("x1", "x2", "x3", "x4")


def test_form_validation():
    with pytest.raises(DimensionError):
        CoordForm(1, 2, (("x", (0, 1)),))
    with pytest.raises(DimensionError):
        CoordForm(2, 3, (("x", (1, 0)),))
    with pytest.raises(DimensionError):
        CoordForm(5, 6, ())


def test_json_round_trip():
    w = parse_form("x*y*dx*dy - z^2*dy*dz")
    data = json.loads(json.dumps(w.to_json()))
    assert data["degree"] == 2 and data["terms"][0]["indices"] == [0, 1]
    assert CoordForm.from_json(data) == w


# -- evaluation examples

def test_eval_examples():
    g = Germ.affine([0.4], [[2.5]])
    assert eval_form(parse_form("dx"), InfinitesimalCube((1.0,), g)) == 2.5
    ident = Germ.affine([0.3, -0.7], np.eye(2))
    assert eval_form(parse_form("dx*dy"), InfinitesimalCube((1.0, 1.0), ident)) == 1.0
    assert eval_form(parse_form("x*dx*dy"), InfinitesimalCube((1.0, 1.0), ident)) == 0.3


def test_eval_dimension_mismatch():
    ident = Germ.affine([0.3, -0.7], np.eye(2))
    with pytest.raises(DimensionError):
        eval_form(parse_form("dx"), InfinitesimalCube((1.0, 1.0), ident))
    with pytest.raises(DimensionError):
        eval_form(parse_form("dx*dy*dz"), InfinitesimalCube((1.0, 1.0), ident))


# -- exterior derivative

def test_sia_derivative_of_zero_form():
    g = Germ.affine([0.3], [[1.7]])
    w = CoordForm(0, 1, (("exp(x)", ()),))
    assert exterior_derivative_sia(w, g) == pytest.approx(math.exp(0.3) * 1.7, rel=1e-15)


def test_sia_derivative_of_x_dy():
    ident = Germ.affine([0.8, -1.2], np.eye(2))
    assert exterior_derivative_sia(parse_form("x*dy"), ident) == pytest.approx(1.0, abs=1e-15)


def test_sia_derivative_of_exact_form_vanishes(rng):
    w = exterior_derivative_coord(CoordForm(0, 3, (("x*y^2 + sin(z)*x", ()),)))
    for _ in range(10):
        assert abs(exterior_derivative_sia(w, random_germ(rng, 2, 3))) <= 1e-10


def test_sia_needs_matching_germ(rng):
    with pytest.raises(DimensionError):
        exterior_derivative_sia(parse_form("x*dy"), random_germ(rng, 1, 2))


def test_impurity_is_detected():
    stray = MultiDual([1e-3, 0.0, 0.0, 2.0], 2)
    with pytest.raises(ImpureInfinitesimalError):
        microcancel(stray)


def test_coordinate_derivative_examples():
    d = exterior_derivative_coord(parse_form("x*dy"))
    assert d.degree == 2 and values_at(d, (0.3, 0.9)) == {(0, 1): 1.0}
    assert exterior_derivative_coord(CoordForm(0, 2, (("3", ()),))).terms == ()
    d = exterior_derivative_coord(parse_form("-y*dx + x*dy"))
    assert values_at(d, (0.3, 0.9)) == {(0, 1): 2.0}


# -- integration over finite cubes

def test_integrate_examples():
    I1 = IDENTITY_CUBES["identity1"]
    assert integrate_form(parse_form("dx"), I1) == pytest.approx(1.0, abs=1e-15)
    assert integrate_form(parse_form("x*dx"), I1) == pytest.approx(0.5, abs=1e-15)
    assert integrate_form(parse_form("dx*dy"), IDENTITY_CUBES["identity2"]) == pytest.approx(1.0)


def test_integrate_respects_orientation():
    flipped = FiniteCube.of(["v", "u"], 2)
    assert integrate_form(parse_form("dx*dy"), flipped) == pytest.approx(-1.0)


def test_integrate_non_polynomial_is_adaptive():
    M = FiniteCube.of(["cos(pi/2*t)", "sin(pi/2*t)"], 1)
    # quarter circle: integral of -y dx + x dy is twice the swept area
    assert integrate_form(parse_form("-y*dx + x*dy"), M) == pytest.approx(math.pi / 2, rel=1e-12)


def test_integrate_zero_cube():
    P = FiniteCube(("2", "3"), ())
    assert integrate_form(CoordForm(0, 2, (("x*y", ()),)), P) == 6.0


# -- properties

seeds = st.integers(0, 2**32 - 1)


def _pair(seed, shift=0):
    rng = np.random.default_rng(seed)
    deg = 1 + seed % 3 if shift == 0 else seed % 3
    m = max(deg + shift, int(rng.integers(1, 4)))
    return rng, deg, m


@given(seeds, st.floats(-3, 3))
def test_homogeneity(seed, a):
    rng, deg, m = _pair(seed)
    w = random_poly_form(rng, deg, m, coef_degree=2)
    germ = random_germ(rng, deg, m)
    lam = tuple(rng.uniform(0.5, 2.0, deg))
    i = int(rng.integers(deg))
    coeffs = np.stack([c.coeffs for c in germ.components], axis=1)
    for mask in range(1 << deg):
        if mask >> i & 1:
            coeffs[mask] *= a
    scaled = Germ.from_coefficients(coeffs)
    base = eval_form(w, InfinitesimalCube(lam, germ))
    assert eval_form(w, InfinitesimalCube(lam, scaled)) == pytest.approx(a * base, abs=1e-12 * max(1, abs(a * base)))


@given(seeds, st.permutations(range(3)))
def test_alternation_exact(seed, perm):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 5))
    w = random_poly_form(rng, 3, m, coef_degree=2)
    base = rng.normal(size=m)
    jac = rng.normal(size=(m, 3))
    sign = round(np.linalg.det(np.eye(3)[list(perm)]))
    g = Germ.affine(base, jac)
    gp = Germ.affine(base, jac[:, list(perm)])
    assert form_tilde(w, gp) == sign * form_tilde(w, g)


@given(seeds)
def test_degeneracy_exact(seed):
    rng, deg, m = _pair(seed)
    w = random_poly_form(rng, deg, m, coef_degree=2)
    lam = list(rng.uniform(0.5, 2.0, deg))
    lam[int(rng.integers(deg))] = 0.0
    assert eval_form(w, InfinitesimalCube(tuple(lam), random_germ(rng, deg, m))) == 0.0


@given(seeds)
def test_sia_matches_coordinate_formula(seed):
    rng, deg, m = _pair(seed, shift=1)
    w = random_poly_form(rng, deg, m, coef_degree=2)
    germ = random_germ(rng, deg + 1, m)
    got = exterior_derivative_sia(w, germ)
    want = form_tilde(exterior_derivative_coord(w), germ)
    assert abs(got - want) <= 1e-10 * max(1.0, abs(want))


@given(seeds)
def test_d_squared_is_zero(seed):
    rng = np.random.default_rng(seed)
    deg = seed % 2
    m = deg + 2 + int(rng.integers(0, 2 - deg))
    w = random_poly_form(rng, deg, m, coef_degree=3)
    dd = exterior_derivative_coord(exterior_derivative_coord(w))
    for _ in range(3):
        germ = random_germ(rng, deg + 2, m)
        assert abs(form_tilde(dd, germ)) <= 1e-10
