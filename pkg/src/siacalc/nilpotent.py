"""Truncated nilpotent algebras modelling R extended by square-zero infinitesimals.

``MultiDual`` is an element of R[e_0, ..., e_{n-1}] / (e_i^2), stored densely:
coefficient ``k`` multiplies the product of the generators whose bits are set
in ``k``.  Maps out of D^n are exactly such elements, so every derivative,
mixed partial and form evaluation in the package is a coefficient lookup.

``MicroVector`` models D(n), where all pairwise products of the infinitesimal
parts vanish; it carries value + gradient and nothing else.

Both types accept array-valued coefficients (a trailing batch shape), which
lets the quadrature code push a whole panel of nodes through one evaluation.
Generator indices are 0-based.
"""

import functools
import math

import numpy as np

from . import primitives
from .errors import DimensionError, ImpureInfinitesimalError, NonInvertibleError

MAX_GENERATORS = 8
DEFAULT_IMPURITY_TOL = 1e-9


@functools.lru_cache(maxsize=None)
def _product_table(n):
    """Index pairs (S, T) with S & T == 0, grouped by target S | T.

    Returns ``(left, right, starts)`` so that for coefficient arrays ``a`` and
    ``b`` the product is ``np.add.reduceat(a[left] * b[right], starts)``.
    """
    left, right, starts = [], [], []
    for target in range(1 << n):
        starts.append(len(left))
        sub = target
        while True:
            left.append(sub)
            right.append(target ^ sub)
            if sub == 0:
                break
            sub = (sub - 1) & target
    return np.array(left), np.array(right), np.array(starts)


def _as_mask(subset, n):
    if isinstance(subset, (int, np.integer)):
        mask = int(subset)
        if mask < 0 or mask >= 1 << n:
            raise DimensionError(f"mask {mask} out of range for {n} generators")
        return mask
    mask = 0
    for i in subset:
        if not 0 <= i < n:
            raise DimensionError(f"generator index {i} out of range for {n} generators")
        mask |= 1 << i
    return mask


def _pad(coeffs, ndim):
    """Insert unit axes after the generator axis so batch shapes right-align."""
    extra = ndim - (coeffs.ndim - 1)
    if extra <= 0:
        return coeffs
    return coeffs.reshape((coeffs.shape[0],) + (1,) * extra + coeffs.shape[1:])


def _pair(a, b):
    nd = max(a.ndim, b.ndim) - 1
    return _pad(a, nd), _pad(b, nd)


def _scalar_batch(coeffs, s):
    """Coefficients and a batch-shaped scalar array, aligned for broadcasting."""
    s = np.asarray(s, dtype=float)
    nd = max(coeffs.ndim - 1, s.ndim)
    return _pad(coeffs, nd), s.reshape((1,) * (nd - s.ndim + 1) + s.shape)


def popcount(mask):
    return bin(mask).count("1")


class MultiDual:
    """Element of the square-zero algebra on ``n`` generators.

    >>> e0 = MultiDual.generator(0, 2)
    >>> (1 + e0) * (1 + e0)
    MultiDual(1 + 2*e0)
    """

    __slots__ = ("n", "coeffs")
    __array_priority__ = 1000  # keep ndarray from hijacking the operators

    def __init__(self, coeffs, n=None):
        coeffs = np.array(coeffs, dtype=float)
        if n is None:
            n = int(round(math.log2(coeffs.shape[0])))
        if not 0 <= n <= MAX_GENERATORS:
            raise DimensionError(f"generator count {n} outside 0..{MAX_GENERATORS}")
        if coeffs.shape[0] != 1 << n:
            raise DimensionError(f"expected {1 << n} coefficients, got {coeffs.shape[0]}")
        coeffs.setflags(write=False)
        self.n = n
        self.coeffs = coeffs

    # -- construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, n):
        value = np.asarray(value, dtype=float)
        c = np.zeros((1 << n,) + value.shape)
        c[0] = value
        return cls(c, n)

    @classmethod
    def generator(cls, i, n):
        c = np.zeros(1 << n)
        c[_as_mask([i], n)] = 1.0
        return cls(c, n)

    @classmethod
    def variable(cls, x0, i=0, n=1):
        """``x0 + e_i``: the seed used for differentiation in direction ``i``."""
        x0 = np.asarray(x0, dtype=float)
        c = np.zeros((1 << n,) + x0.shape)
        c[0] = x0
        c[_as_mask([i], n)] = 1.0
        return cls(c, n)

    @classmethod
    def from_terms(cls, terms, n):
        """Build from ``{subset: coefficient}`` where subsets are iterables of indices."""
        c = np.zeros(1 << n)
        for subset, value in terms.items():
            c[_as_mask(subset, n)] += value
        return cls(c, n)

    # -- inspection ---------------------------------------------------------

    @property
    def size(self):
        return 1 << self.n

    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]

    @property
    def standard_part(self):
        return self.coeffs[0] if self.batch_shape else float(self.coeffs[0])

    @property
    def nilpotent_part(self):
        c = np.array(self.coeffs)
        c[0] = 0.0
        return MultiDual(c, self.n)

    def coefficient(self, subset):
        """Coefficient of the product of generators in ``subset`` (or a bitmask)."""
        v = self.coeffs[_as_mask(subset, self.n)]
        return v if np.ndim(v) else float(v)

    def is_invertible(self):
        return bool(np.all(self.coeffs[0] != 0))

    def terms(self):
        """Nonzero coefficients as ``{tuple_of_generators: value}`` (scalar elements only)."""
        out = {}
        for mask in range(self.size):
            v = float(self.coeffs[mask])
            if v != 0.0:
                out[tuple(i for i in range(self.n) if mask >> i & 1)] = v
        return out

    def __repr__(self):
        if self.batch_shape:
            return f"MultiDual(n={self.n}, batch={self.batch_shape})"
        parts = []
        for subset, v in self.terms().items():
            mono = "*".join(f"e{i}" for i in subset)
            parts.append(f"{v:g}" if not mono else (mono if v == 1 else f"{v:g}*{mono}"))
        return "MultiDual(" + (" + ".join(parts) or "0") + ")"

    # -- embedding between algebras ---------------------------------------------

    def extend(self, n_new):
        """Embed into the algebra with ``n_new >= n`` generators (new ones absent)."""
        if n_new < self.n:
            raise DimensionError("cannot shrink a MultiDual with extend()")
        if n_new == self.n:
            return self
        c = np.zeros((1 << n_new,) + self.batch_shape)
        c[: self.size] = self.coeffs
        return MultiDual(c, n_new)

    def split_top(self):
        """Write ``self = a + b * e_{n-1}`` and return ``(a, b)`` over ``n-1`` generators."""
        half = self.size >> 1
        return MultiDual(self.coeffs[:half], self.n - 1), MultiDual(self.coeffs[half:], self.n - 1)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, MultiDual):
            if other.n != self.n:
                raise DimensionError(
                    f"generator count mismatch: {self.n} vs {other.n}"
                )
            return other
        if isinstance(other, MicroVector):
            return NotImplemented
        if isinstance(other, (int, float, np.ndarray, np.number)):
            return None
        return NotImplemented

    def _add_scalar(self, s):
        s = np.asarray(s, dtype=float)
        batch = np.broadcast_shapes(self.batch_shape, s.shape)
        c = np.array(np.broadcast_to(_pad(self.coeffs, len(batch)), (self.size,) + batch))
        c[0] = c[0] + s
        return MultiDual(c, self.n)

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            return self._add_scalar(other)
        a, b = _pair(self.coeffs, o.coeffs)
        return MultiDual(a + b, self.n)

    __radd__ = __add__

    def __neg__(self):
        return MultiDual(-self.coeffs, self.n)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            return self._add_scalar(-np.asarray(other, dtype=float))
        a, b = _pair(self.coeffs, o.coeffs)
        return MultiDual(a - b, self.n)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            c, s = _scalar_batch(self.coeffs, other)
            return MultiDual(c * s, self.n)
        a, b = _pair(self.coeffs, o.coeffs)
        if self.n == 0:
            return MultiDual(a * b, 0)
        left, right, starts = _product_table(self.n)
        prod = a[left] * b[right]
        return MultiDual(np.add.reduceat(prod, starts, axis=0), self.n)

    __rmul__ = __mul__

    def invert(self):
        """Multiplicative inverse via the finite geometric series on the nilpotent part."""
        x0 = self.coeffs[0]
        if np.any(x0 == 0):
            raise NonInvertibleError("standard part is zero; element is not invertible")
        u = self.nilpotent_part * (1.0 / x0)
        total = MultiDual.constant(np.ones_like(x0), self.n)
        term = total
        for _ in range(self.n):
            term = term * (-u)
            total = total + term
        return total * (1.0 / x0)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise NonInvertibleError("division by zero")
            c, s = _scalar_batch(self.coeffs, other)
            return MultiDual(c / s, self.n)
        return _exact_standard(self * o.invert(), self.coeffs[0] / o.coeffs[0])

    def __rtruediv__(self, other):
        return _exact_standard(self.invert() * other, other / self.coeffs[0])

    def __pow__(self, exponent):
        k = float(exponent)
        if k.is_integer():
            k = int(k)
            base = self if k >= 0 else self.invert()
            return integer_power(base, abs(k), MultiDual.constant(np.ones(self.batch_shape), self.n))
        return self.lift("pow", k)

    # -- smooth lifting -------------------------------------------------------

    def lift(self, name, exponent=None):
        """Apply a smooth primitive: ``f(x0 + u) = sum_j f^(j)(x0) u^j / j!``.

        Exact in the truncated algebra because ``u^(n+1) = 0``.
        """
        x0 = self.coeffs[0]
        derivs = primitives.derivative_sequence(name, x0, self.n, exponent)
        if self.n == 0:
            return MultiDual(np.asarray(derivs[0])[None], 0)
        if self.n == 1:
            d1 = derivs[1] * self.coeffs[1]
            c = np.stack([np.broadcast_to(derivs[0], d1.shape), d1])
            return MultiDual(c, 1)
        u = self.nilpotent_part
        total = MultiDual.constant(derivs[0], self.n)
        term = None
        for j in range(1, self.n + 1):
            term = u if term is None else term * u
            if not np.any(term.coeffs):
                break
            total = total + term * (derivs[j] / math.factorial(j))
        # keep f(x0) exact even when a higher derivative overflowed (0 * inf)
        return _exact_standard(total, derivs[0])

    def sqrt(self):
        return self.lift("sqrt")

    def exp(self):
        return self.lift("exp")

    def log(self):
        return self.lift("log")


def _exact_standard(q, value):
    """Overwrite the standard part of a quotient with the correctly rounded
    real quotient, so it matches plain-real evaluation bit for bit."""
    c = np.array(q.coeffs)
    c[0] = value
    return MultiDual(c, q.n)


def integer_power(base, k, one):
    """Binary exponentiation using only ring multiplication."""
    result = one
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def coefficient(a, subset):
    """Coefficient of ``a`` at ``subset``; plain reals only have a standard part."""
    if isinstance(a, MultiDual):
        return a.coefficient(subset)
    if len(tuple(subset)) == 0:
        return float(a)
    return 0.0


def invert(a):
    return a.invert() if isinstance(a, (MultiDual, MicroVector)) else 1.0 / a


def sqrt_alg(a):
    """Square root in the algebra; the result has positive standard part."""
    if isinstance(a, MultiDual):
        return a.lift("sqrt")
    return primitives.apply_real("sqrt", a)


def lift_smooth(name, a, exponent=None):
    return primitives.apply(name, a, exponent)


def microcancel(a, tol=DEFAULT_IMPURITY_TOL):
    """Extract the coefficient of e_0...e_{n-1}, insisting ``a`` is a pure multiple of it.

    Realises microcancellation: if ``a = c * e_0...e_{n-1}`` then ``c`` is
    unique.  Any other coefficient above ``tol`` means the construction that
    produced ``a`` was not what the caller believed.
    """
    if not isinstance(a, MultiDual):
        if abs(a) > tol:
            raise ImpureInfinitesimalError(f"expected a pure infinitesimal, got real {a!r}")
        return 0.0
    top = a.size - 1
    stray = np.abs(a.coeffs[:top])
    if stray.size and np.max(stray) > tol:
        mask = int(np.unravel_index(np.argmax(stray), stray.shape)[0])
        raise ImpureInfinitesimalError(
            f"coefficient at mask {mask:#b} has magnitude {float(np.max(stray)):.3e} > {tol:g}"
        )
    return a.coefficient(top)


class MicroVector:
    """Value plus gradient: a point of x + D(k), where all d_i d_j vanish.

    >>> x = MicroVector(3.0, [1.0, 0.0])
    >>> (x * x).grad
    array([6., 0.])
    """

    __slots__ = ("value", "grad")
    __array_priority__ = 1000

    def __init__(self, value, grad):
        value = np.asarray(value, dtype=float)
        grad = np.array(grad, dtype=float)
        if grad.ndim == 0:
            raise DimensionError("gradient must be a sequence")
        grad.setflags(write=False)
        self.value = value if value.ndim else float(value)
        self.grad = grad

    @classmethod
    def seed(cls, point, i, k=None):
        """Coordinate ``i`` of ``point`` perturbed along slot ``i`` of a ``k``-slot gradient."""
        k = len(point) if k is None else k
        x = np.asarray(point[i], dtype=float)
        g = np.zeros((k,) + x.shape)
        g[i] = 1.0
        return cls(x, g)

    @property
    def k(self):
        return self.grad.shape[0]

    def __repr__(self):
        return f"MicroVector({self.value!r}, {self.grad.tolist()!r})"

    def _coerce(self, other):
        if isinstance(other, MicroVector):
            if other.k != self.k:
                raise DimensionError(f"gradient length mismatch: {self.k} vs {other.k}")
            return other
        if isinstance(other, (int, float, np.ndarray, np.number)):
            return None
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            return MicroVector(self.value + np.asarray(other, dtype=float), self.grad)
        return MicroVector(self.value + o.value, self.grad + o.grad)

    __radd__ = __add__

    def __neg__(self):
        return MicroVector(-self.value, -self.grad)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            s = np.asarray(other, dtype=float)
            return MicroVector(self.value * s, self.grad * s)
        return MicroVector(self.value * o.value, self.value * o.grad + o.value * self.grad)

    __rmul__ = __mul__

    def invert(self):
        if np.any(np.asarray(self.value) == 0):
            raise NonInvertibleError("standard part is zero; element is not invertible")
        inv = 1.0 / np.asarray(self.value)
        return MicroVector(inv, -self.grad * inv * inv)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            s = np.asarray(other, dtype=float)
            if np.any(s == 0):
                raise NonInvertibleError("division by zero")
            return MicroVector(self.value / s, self.grad / s)
        q = self * o.invert()
        return MicroVector(np.asarray(self.value) / o.value, q.grad)

    def __rtruediv__(self, other):
        q = self.invert() * other
        return MicroVector(np.asarray(other, dtype=float) / self.value, q.grad)

    def __pow__(self, exponent):
        k = float(exponent)
        if k.is_integer():
            k = int(k)
            base = self if k >= 0 else self.invert()
            one = MicroVector(np.ones_like(np.asarray(self.value)), np.zeros_like(self.grad))
            return integer_power(base, abs(k), one)
        return self.lift("pow", k)

    def lift(self, name, exponent=None):
        f0, f1 = primitives.derivative_sequence(name, self.value, 1, exponent)
        return MicroVector(f0, self.grad * f1)
