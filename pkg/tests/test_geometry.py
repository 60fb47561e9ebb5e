import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from siacalc.errors import DomainError
from siacalc.geometry import (
    CurveSpec,
    NegativeRadiusWarning,
    arclength,
    area_under_curve,
    catenary_residual,
    cone_partial_surface,
    cone_sector_rate,
    polar_arclength,
    surface_of_revolution,
    volume_of_revolution,
)
from siacalc.quadrature import QuadratureConfig


def test_arclength_examples():
    assert arclength(CurveSpec("5", "x", 0.0, 2.5)) == pytest.approx(2.5, rel=1e-14)
    assert arclength(CurveSpec("3*x", "x", 0.0, 1.0)) == pytest.approx(math.sqrt(10), rel=1e-14)
    for a, x in [(0.5, 0.8), (2.0, 3.0)]:
        s = arclength(CurveSpec(f"{a}*cosh(x/{a})", "x", 0.0, x))
        assert s == pytest.approx(a * math.sinh(x / a), rel=1e-12)


def test_curve_interval_order():
    with pytest.raises(ValueError):
        CurveSpec("x", "x", 1.0, 0.0)


def test_surface_examples():
    assert surface_of_revolution(CurveSpec("2", "x", 0, 3)) == pytest.approx(2 * math.pi * 2 * 3)
    m, r = 0.75, 1.5
    slant = math.hypot(r, r / m)
    assert surface_of_revolution(CurveSpec(f"{m}*x", "x", 0, r / m)) == pytest.approx(math.pi * r * slant)
    assert surface_of_revolution(CurveSpec("sqrt(1 - x^2)", "x", 0, 0.5)) == pytest.approx(math.pi)


def test_surface_negative_radius_warns():
    with pytest.warns(NegativeRadiusWarning):
        surface_of_revolution(CurveSpec("x - 1", "x", 0, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        surface_of_revolution(CurveSpec("x + 1", "x", 0, 2))


def test_volume_examples():
    assert volume_of_revolution(CurveSpec("2", "x", 0, 3)) == pytest.approx(math.pi * 4 * 3)
    m, h = 0.6, 2.0
    assert volume_of_revolution(CurveSpec(f"{m}*x", "x", 0, h)) == pytest.approx(math.pi / 3 * (m * h) ** 2 * h)
    assert volume_of_revolution(CurveSpec("sqrt(x)", "x", 0, 1)) == pytest.approx(math.pi / 2)


def test_polar_examples():
    assert polar_arclength("3", 0, 2 * math.pi) == pytest.approx(6 * math.pi)
    want = (math.sqrt(2) + math.log(1 + math.sqrt(2))) / 2
    assert polar_arclength("theta", 0, 1) == pytest.approx(want, rel=1e-13)
    assert polar_arclength("exp(theta)", 0, 1) == pytest.approx(math.sqrt(2) * (math.e - 1), rel=1e-13)


def test_area_examples():
    assert area_under_curve(CurveSpec("1", "x", 0, 1)) == pytest.approx(1.0)
    assert area_under_curve(CurveSpec("x", "x", 0, 2)) == pytest.approx(2.0)
    assert area_under_curve(CurveSpec("sin(x)", "x", 0, math.pi)) == pytest.approx(2.0, rel=1e-13)


def test_cone_examples():
    assert cone_partial_surface(1.3, 2.1, 2 * math.pi) == pytest.approx(math.pi * 1.3 * 2.1)
    assert cone_partial_surface(1.0, 1.0, 0.0) == 0.0
    assert cone_partial_surface(1.0, 2.0, math.pi) == pytest.approx(math.pi)
    for bad in [(-1, 1, 1), (1, 0, 1), (1, 1, 7.0), (1, 1, -0.1)]:
        with pytest.raises(DomainError):
            cone_partial_surface(*bad)


def test_cone_rate_is_sector_rate():
    m, xb = 0.9, 1.7
    r, slant = m * xb, xb * math.hypot(1, m)
    assert cone_sector_rate(m, xb) == pytest.approx(r * slant / 2, rel=1e-13)


def test_catenary_examples():
    for a in (0.5, 1.0, 3.0):
        rep = catenary_residual("a*cosh(x/a)", a, np.linspace(-2 * a, 2 * a, 41))
        assert rep.max_residual <= 1e-9
        assert rep.initial_value_gap == 0.0 and rep.initial_slope == 0.0
    rep = catenary_residual("x^2", 1.0, [1.0])
    assert rep.residuals[0] == pytest.approx(1.0)
    with pytest.raises(DomainError):
        catenary_residual("a*cosh(x/a)", 0.0, [0.0])


def test_catenary_propagates_domain_errors():
    with pytest.raises(DomainError):
        catenary_residual("log(x)", 1.0, [-1.0])


@given(st.floats(-1, 0), st.floats(0, 1), st.floats(1, 2), st.floats(0.2, 2.0))
def test_arclength_additive(a, b, c, k):
    f = f"sin({k!r}*x) + x^2/3"
    left = arclength(CurveSpec(f, "x", a, b))
    right = arclength(CurveSpec(f, "x", b, c))
    assert left + right == pytest.approx(arclength(CurveSpec(f, "x", a, c)), abs=1e-9)


@given(st.floats(0.1, 3.0), st.floats(0.2, 3.0))
def test_cone_property(m, xb):
    area = surface_of_revolution(CurveSpec(f"{m!r}*x", "x", 0.0, xb))
    assert area == pytest.approx(cone_partial_surface(m * xb, xb * math.sqrt(1 + m * m), 2 * math.pi), abs=1e-9)


@pytest.mark.parametrize("fn", [arclength, surface_of_revolution, volume_of_revolution, area_under_curve])
def test_tolerance_halving(fn):
    c = CurveSpec("1 + x*exp(-x)*cos(3*x)", "x", 0.0, 2.0)
    assert abs(fn(c) - fn(c, QuadratureConfig().tightened())) <= 1e-9
