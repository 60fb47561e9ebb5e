"""Generalized Stokes verification and the fundamental theorem as a 0-form case."""

import math
from dataclasses import dataclass

import numpy as np

from .calculus import derivative
from .cubes import FiniteCube, Germ, boundary_finite
from .errors import DimensionError
from .expr import as_expr
from .forms import (
    DEFAULT_FORM_ORDER,
    CoordForm,
    as_form,
    exterior_derivative_coord,
    exterior_derivative_sia,
    integrate_form,
)
from .quadrature import DEFAULT
from .vector import StokesCheck


def verify_generalized_stokes(w, M, cfg=None, quad_order=DEFAULT_FORM_ORDER):
    """(integral of w over the boundary of M, integral of dw over M, gap).

    Polynomial data is integrated with a fixed Gauss-Legendre rule; pass a
    ``cfg`` to force adaptive cubature.
    """
    w = as_form(w, M.m)
    if M.n != w.degree + 1:
        raise DimensionError(f"a {w.degree}-form pairs with the boundary of a {w.degree + 1}-cube")
    if w.m != M.m:
        raise DimensionError(f"form on R^{w.m} against a cube in R^{M.m}")
    lhs = math.fsum(c * integrate_form(w, face, quad_order, cfg) for c, face in boundary_finite(M))
    rhs = integrate_form(exterior_derivative_coord(w), M, quad_order, cfg)
    return StokesCheck(lhs, rhs, abs(lhs - rhs))


@dataclass(frozen=True)
class FTCReport:
    integral: float  # integral of dF over [0, 1]
    difference: float  # F(1) - F(0)
    gap: float
    germ_gap: float  # worst |d~omega(g) - F'(g(0)) a| over the sampled germs
    germs: tuple  # (g0, a, d~omega(g), F'(g0) a) per germ


def ftc_case(F, cfg=DEFAULT, n_germs=20, seed=0, var="x", germ_range=(0.0, 1.0)):
    """Fundamental theorem of calculus as the 0-form instance of Stokes.

    With omega = F, integrating d(omega) over [0, 1] must give F(1) - F(0),
    and on each 1-germ g(d) = g0 + a d the SIA exterior derivative must
    equal F'(g0) a.  Germs are drawn with g0 uniform on ``germ_range`` and a
    standard normal.
    """
    F = as_expr(F)
    w = CoordForm(0, 1, ((F, ()),), (var,))
    M = FiniteCube.of(["t"], 1)
    integral = integrate_form(exterior_derivative_coord(w), M, None, cfg)
    difference = float(F.evaluate({var: 1.0})) - float(F.evaluate({var: 0.0}))
    rng = np.random.default_rng(seed)
    germs = []
    worst = 0.0
    for _ in range(n_germs):
        g0 = float(rng.uniform(*germ_range))
        a = float(rng.normal())
        got = float(exterior_derivative_sia(w, Germ.affine([g0], [[a]])))
        want = derivative(F, var, g0) * a
        worst = max(worst, abs(got - want))
        germs.append((g0, a, got, want))
    return FTCReport(integral, difference, abs(integral - difference), worst, tuple(germs))


__all__ = ["FTCReport", "ftc_case", "verify_generalized_stokes"]
