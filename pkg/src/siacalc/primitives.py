"""Smooth primitives: real evaluation and closed-form derivative tables.

Every primitive is C-infinity on its domain, so it lifts to the nilpotent
algebra through its Taylor coefficients.  ``derivative_sequence`` returns
``[f(x), f'(x), ..., f^(order)(x)]`` and is the only thing the lifts need.
"""

import math

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError

PRIMITIVES = frozenset(
    {"sin", "cos", "tan", "exp", "log", "sinh", "cosh", "tanh", "sqrt"}
)
# rejected by the parser with a dedicated message
NON_SMOOTH = frozenset({"abs", "floor", "ceil", "max", "min", "sign", "round"})

MAX_ORDER = 8

_REAL = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "sqrt": np.sqrt,
}


def _is_integer(r):
    return float(r).is_integer()


def check_domain(name, x, exponent=None, strict=False):
    """Raise DomainError if ``x`` (scalar or array) leaves the real domain.

    ``strict`` is used by the lifts: a jet needs every derivative finite, so
    sqrt and fractional powers require a strictly positive base point.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name}: non-finite argument")
    if name == "log" and np.any(x <= 0):
        raise DomainError("log: argument must be positive")
    if name == "sqrt":
        if np.any(x < 0) or (strict and np.any(x == 0)):
            raise DomainError("sqrt: argument must be positive")
    if name == "pow" and not _is_integer(exponent):
        if np.any(x < 0) or ((strict or exponent < 0) and np.any(x == 0)):
            raise DomainError(f"pow: base must be positive for exponent {exponent!r}")
    if name == "pow" and _is_integer(exponent) and exponent < 0 and np.any(x == 0):
        raise DomainError("pow: zero base with negative exponent")


def apply_real(name, x, exponent=None):
    """Evaluate a primitive on a float or ndarray, with domain checks."""
    check_domain(name, x, exponent)
    with np.errstate(all="ignore"):
        if name == "pow":
            out = np.power(np.asarray(x, dtype=float), float(exponent))
        else:
            out = _REAL[name](np.asarray(x, dtype=float))
    if np.ndim(out) == 0:
        return float(out)
    return out


def _tan_like(t, order, sign):
    # d/dx p(t) = p'(t) * (1 + sign*t^2) for t = tan(x) (sign=+1) or tanh(x) (sign=-1)
    poly = np.array([0.0, 1.0])
    chain = np.array([1.0, 0.0, float(sign)])
    out = [t]
    for _ in range(order):
        poly = P.polymul(P.polyder(poly), chain)
        out.append(P.polyval(t, poly))
    return out


def derivative_sequence(name, x, order, exponent=None):
    """Return ``[f(x), f'(x), ..., f^(order)(x)]`` for primitive ``name``.

    ``name`` is one of :data:`PRIMITIVES` or ``"pow"`` (with a real
    ``exponent``).  ``x`` may be a float or an array of base points.
    """
    if order > MAX_ORDER:
        raise DomainError(f"derivative tables stop at order {MAX_ORDER}")
    check_domain(name, x, exponent, strict=order > 0)
    x = np.asarray(x, dtype=float)
    if name == "exp":
        e = np.exp(x)
        return [e] * (order + 1)
    if name in ("sin", "cos"):
        s, c = np.sin(x), np.cos(x)
        cycle = [s, c, -s, -c] if name == "sin" else [c, -s, -c, s]
        return [cycle[j % 4] for j in range(order + 1)]
    if name in ("sinh", "cosh"):
        sh, ch = np.sinh(x), np.cosh(x)
        pair = [sh, ch] if name == "sinh" else [ch, sh]
        return [pair[j % 2] for j in range(order + 1)]
    if name == "log":
        out = [np.log(x)]
        for j in range(1, order + 1):
            out.append((-1) ** (j - 1) * math.factorial(j - 1) / x**j)
        return out
    if name == "tan":
        return _tan_like(np.tan(x), order, +1)
    if name == "tanh":
        return _tan_like(np.tanh(x), order, -1)
    if name == "sqrt":
        out = derivative_sequence("pow", x, order, 0.5)
        out[0] = np.sqrt(x)  # match plain-real evaluation exactly
        return out
    if name == "pow":
        r = float(exponent)
        out = []
        falling = 1.0
        for j in range(order + 1):
            if j > 0:
                falling *= r - (j - 1)
            if falling == 0.0:
                out.append(np.zeros_like(x))
            else:
                out.append(falling * np.power(x, r - j))
        return out
    raise DomainError(f"unknown primitive {name!r}")


def apply(name, x, exponent=None):
    """Apply a primitive to a real or to any ring element that knows how to lift."""
    lift = getattr(x, "lift", None)
    if lift is not None:
        return lift(name, exponent)
    return apply_real(name, x, exponent)
