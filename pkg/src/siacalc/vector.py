"""Line and surface integrals in R^3, curl and divergence, classical Stokes/divergence checks."""

from typing import NamedTuple

import numpy as np

from .cubes import ChainFormal, FiniteCube, boundary_finite
from .errors import DegenerateParametrizationError, DimensionError
from .expr import as_expr
from .nilpotent import MicroVector
from .quadrature import DEFAULT, adaptive_cubature

COORDS = ("x", "y", "z")


class StokesCheck(NamedTuple):
    lhs: float
    rhs: float
    gap: float


def _field(F):
    F = tuple(as_expr(c) for c in F)
    if len(F) != 3:
        raise DimensionError("vector fields live in R^3 (three components)")
    return F


def _eval_field(F, pts):
    env = dict(zip(COORDS, pts))
    shape = np.shape(pts[0])
    return np.array([np.broadcast_to(np.asarray(c.evaluate(env), float), shape) for c in F])


def jacobian(F, pts):
    """J[k, j] = dF_k/dx_j at points of shape (3, N), one MicroVector pass."""
    F = _field(F)
    pts = np.asarray(pts, dtype=float)
    env = {name: MicroVector.seed(pts, i, 3) for i, name in enumerate(COORDS)}
    out = np.zeros((3, 3) + pts.shape[1:])
    for k, c in enumerate(F):
        v = c.evaluate(env)
        if isinstance(v, MicroVector):
            out[k] = v.grad
    return out


def curl_div(F, p):
    """(curl F(p), div F(p)); ``p`` may also be an array of points of shape (3, N)."""
    p = np.asarray(p, dtype=float)
    scalar = p.ndim == 1
    pts = p[:, None] if scalar else p
    J = jacobian(F, pts)
    curl = np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])
    div = J[0, 0] + J[1, 1] + J[2, 2]
    if scalar:
        return curl[:, 0], float(div[0])
    return curl, div


def _as_chain(c):
    return c if isinstance(c, ChainFormal) else ChainFormal.of(c)


def _check_cube(C, n):
    if not isinstance(C, FiniteCube) or C.n != n or C.m != 3:
        raise DimensionError(f"expected a finite {n}-cube in R^3")


def line_integral(F, C, cfg=DEFAULT):
    """Integral over [0, 1] of F(C(t)) . C'(t); linear over chains of curves."""
    F = _field(F)
    total = 0.0
    for coef, curve in _as_chain(C):
        _check_cube(curve, 1)

        def integrand(t, curve=curve):
            base, cols = curve.jet(t)
            return np.einsum("kn,kn->n", _eval_field(F, base), cols[:, 0])

        total += coef * adaptive_cubature(integrand, (0.0,), (1.0,), cfg)
    return total


def _surface_integrand(kind, f, S):
    def integrand(t):
        base, cols = S.jet(t)
        cross = np.cross(cols[:, 0], cols[:, 1], axis=0)
        if kind == "scalar":
            mag = np.sqrt(np.einsum("kn,kn->n", cross, cross))
            if np.any(mag == 0):
                raise DegenerateParametrizationError("surface normal vanishes at a quadrature node")
            env = dict(zip(COORDS, base))
            val = np.broadcast_to(np.asarray(f.evaluate(env), float), mag.shape)
            return val * mag
        if callable(f):
            field = f(base)
        else:
            field = _eval_field(f, base)
        return np.einsum("kn,kn->n", field, cross)

    return integrand


def surface_integral(kind, f, S, cfg=DEFAULT):
    """Scalar surface integral (``kind="scalar"``, f a scalar expression) or flux
    (``kind="flux"``, f a 3-component field) over a 2-cube or chain of them."""
    if kind not in ("scalar", "flux"):
        raise ValueError("kind must be 'scalar' or 'flux'")
    if kind == "scalar":
        f = as_expr(f)
    elif not callable(f):
        f = _field(f)
    total = 0.0
    for coef, patch in _as_chain(S):
        _check_cube(patch, 2)
        total += coef * adaptive_cubature(
            _surface_integrand(kind, f, patch), (0.0, 0.0), (1.0, 1.0), cfg
        )
    return total


def volume_integral(g, M, cfg=DEFAULT):
    """Integral of a scalar function (callable on (3, N) points) over a 3-cube,
    weighted by the signed Jacobian determinant of the map."""
    _check_cube(M, 3)

    def integrand(t):
        base, cols = M.jet(t)
        det = np.linalg.det(np.moveaxis(cols, -1, 0))
        return g(base) * det

    return adaptive_cubature(integrand, (0.0,) * 3, (1.0,) * 3, cfg)


def verify_classical(theorem, F, region, cfg=DEFAULT):
    """Both sides of Stokes (flux of curl vs circulation round the boundary)
    or of the divergence theorem (boundary flux vs volume integral of div)."""
    F = _field(F)
    if theorem == "stokes":
        _check_cube(region, 2)
        lhs = surface_integral("flux", lambda pts: curl_div(F, pts)[0], region, cfg)
        rhs = line_integral(F, boundary_finite(region), cfg)
    elif theorem == "divergence":
        _check_cube(region, 3)
        lhs = surface_integral("flux", F, boundary_finite(region), cfg)
        rhs = volume_integral(lambda pts: curl_div(F, pts)[1], region, cfg)
    else:
        raise ValueError("theorem must be 'stokes' or 'divergence'")
    return StokesCheck(lhs, rhs, abs(lhs - rhs))


__all__ = [
    "StokesCheck",
    "curl_div",
    "jacobian",
    "line_integral",
    "surface_integral",
    "verify_classical",
    "volume_integral",
]
