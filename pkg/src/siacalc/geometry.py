"""Arclength, surfaces and volumes of revolution, and the catenary.

Every formula here comes from the same micro-step argument: on an
infinitesimal step d the curve is straight, so the increment of the
quantity is d times an integrand built from f and f'.  Microcancellation
identifies that integrand as the derivative of the quantity, and the
quadrature then recovers the quantity itself.  The derivatives inside the
integrands are read off the nilpotent algebra, vectorised over the
quadrature nodes.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .expr import Expr, as_expr
from .nilpotent import MultiDual
from .quadrature import DEFAULT, quad


class NegativeRadiusWarning(UserWarning):
    """The profile curve dips below the axis of revolution."""


@dataclass(frozen=True)
class CurveSpec:
    """Graph of ``y = f(var)`` over ``[a, b]``."""

    f: Expr
    var: str = "x"
    a: float = 0.0
    b: float = 1.0
    env: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "f", as_expr(self.f))
        if not self.a <= self.b:
            raise ValueError(f"interval endpoints out of order: [{self.a}, {self.b}]")

    def jet(self, t, order=1):
        """Value and derivatives up to ``order`` at the nodes ``t``."""
        t = np.asarray(t, dtype=float)
        x = MultiDual.constant(t, order)
        for i in range(order):
            x = x + MultiDual.generator(i, order)
        out = self.f.evaluate({**self.env, self.var: x})
        if not isinstance(out, MultiDual):
            v = np.broadcast_to(np.asarray(out, dtype=float), t.shape)
            return [v] + [np.zeros_like(t)] * order
        masks = [(1 << k) - 1 for k in range(order + 1)]
        return [np.broadcast_to(out.coeffs[m], t.shape) for m in masks]


def _curve(c, var="x", a=None, b=None):
    if isinstance(c, CurveSpec):
        return c
    return CurveSpec(as_expr(c), var, 0.0 if a is None else a, 1.0 if b is None else b)


def arclength(c, cfg=DEFAULT):
    """Length of the graph: integral of sqrt(1 + f'(t)^2)."""
    c = _curve(c)

    def integrand(t):
        _, slope = c.jet(t)
        return np.sqrt(1.0 + slope * slope)

    return quad(integrand, c.a, c.b, cfg)


def surface_of_revolution(c, cfg=DEFAULT):
    """Area swept by the graph rotating about the x-axis: 2 pi int f sqrt(1 + f'^2)."""
    c = _curve(c)
    warned = []

    def integrand(t):
        y, slope = c.jet(t)
        if not warned and np.any(y < 0):
            warned.append(True)
            warnings.warn("profile curve is negative on the interval", NegativeRadiusWarning)
        return 2.0 * math.pi * y * np.sqrt(1.0 + slope * slope)

    return quad(integrand, c.a, c.b, cfg)


def volume_of_revolution(c, cfg=DEFAULT):
    """Volume of the solid of revolution; a slab of thickness d holds pi f^2 d."""
    c = _curve(c)

    def integrand(t):
        y = c.jet(t, order=0)[0]
        return math.pi * y * y

    return quad(integrand, c.a, c.b, cfg)


def polar_arclength(f, a, b, var="theta", cfg=DEFAULT, env=None):
    """Length of r = f(theta): integral of sqrt(f^2 + f'^2)."""
    c = CurveSpec(as_expr(f), var, a, b, dict(env or {}))

    def integrand(t):
        r, dr = c.jet(t)
        return np.sqrt(r * r + dr * dr)

    return quad(integrand, c.a, c.b, cfg)


def area_under_curve(c, cfg=DEFAULT):
    """Signed area between the graph and the x-axis."""
    c = _curve(c)
    return quad(lambda t: c.jet(t, order=0)[0], c.a, c.b, cfg)


def cone_partial_surface(r, slant, theta):
    """Area swept when a cone's generator (radius r, slant height ``slant``)
    turns through ``theta`` radians: the sector area theta * r * slant / 2."""
    if r <= 0 or slant <= 0:
        raise DomainError("cone radius and slant height must be positive")
    if not 0.0 <= theta <= 2.0 * math.pi:
        raise DomainError(f"angle {theta} outside [0, 2*pi]")
    return 0.5 * theta * r * slant


def cone_sector_rate(m, x_end):
    """dA/dtheta for the cone y = m x on [0, x_end], computed as the full
    surface integrand divided by 2 pi.  Constant in theta, which is the
    content of the sector-area formula."""
    return surface_of_revolution(CurveSpec(as_expr(f"{m!r}*x"), "x", 0.0, x_end)) / (2 * math.pi)


@dataclass(frozen=True)
class CatenaryReport:
    xs: np.ndarray
    residuals: np.ndarray  # 1 + u'^2 - a^2 u''^2 at each sample
    initial_value_gap: float  # u(0) - a
    initial_slope: float  # u'(0)

    @property
    def max_residual(self):
        return float(np.max(np.abs(self.residuals))) if self.residuals.size else 0.0


def catenary_residual(u, a, xs, var="x", env=None):
    """Residual of the catenary equation 1 + u'^2 = a^2 u''^2 along ``xs``.

    ``u`` may refer to the parameter ``a`` by name.  The first and second
    derivatives come from a two-generator evaluation at every sample.
    """
    if a <= 0:
        raise DomainError("catenary parameter a must be positive")
    env = {"a": float(a), **(env or {})}
    c = CurveSpec(as_expr(u), var, 0.0, 0.0, env)
    xs = np.asarray(xs, dtype=float)
    _, d1, d2 = c.jet(xs, order=2)
    res = 1.0 + d1 * d1 - a * a * d2 * d2
    y0, s0 = c.jet(np.array([0.0]))
    return CatenaryReport(xs, np.asarray(res), float(y0[0] - a), float(s0[0]))


__all__ = [
    "CatenaryReport",
    "CurveSpec",
    "NegativeRadiusWarning",
    "arclength",
    "area_under_curve",
    "catenary_residual",
    "cone_partial_surface",
    "cone_sector_rate",
    "polar_arclength",
    "surface_of_revolution",
    "volume_of_revolution",
]
