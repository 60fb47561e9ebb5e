"""Coordinate differential forms on R^m, evaluated on cubes.

A form sum_I a_I dx_I assigns to a germ f the number

    omega~(f) = sum_I a_I(f(0)) * det(first-order coefficients of f_I)

and to an infinitesimal cube (d, f) the value d_1...d_n * omega~(f).  This
satisfies homogeneity, alternation and degeneracy, and depends on the germ
only through its 1-jet.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .cubes import InfinitesimalCube, boundary_inf, permutations_with_sign
from .errors import DimensionError, ExprSyntaxError
from .expr import BinOp, Diff, Neg, Num, Var, as_expr, is_polynomial, neg, parse, variables
from .nilpotent import DEFAULT_IMPURITY_TOL, MultiDual, microcancel
from .quadrature import DEFAULT, adaptive_cubature, fixed_cubature

DEFAULT_FORM_ORDER = 12
MAX_FORM_DEGREE = 4


def default_coords(m):
    return ("x", "y", "z")[:m] if m <= 3 else tuple(f"x{i + 1}" for i in range(m))


def _sort_with_sign(indices):
    """Sort a wedge of differentials; returns (sign, sorted) or (0, None) on a repeat."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, None
    sign = 1
    for a in range(len(idx)):
        for b in range(len(idx) - 1 - a):
            if idx[b] > idx[b + 1]:
                idx[b], idx[b + 1] = idx[b + 1], idx[b]
                sign = -sign
    return sign, tuple(idx)


@dataclass(frozen=True)
class CoordForm:
    """``terms`` is a tuple of (coefficient expression, strictly increasing index tuple)."""

    degree: int
    m: int
    terms: tuple
    coords: tuple = None

    def __post_init__(self):
        if self.coords is None:
            object.__setattr__(self, "coords", default_coords(self.m))
        if len(self.coords) != self.m:
            raise DimensionError("one coordinate name per ambient dimension")
        if not 0 <= self.degree <= MAX_FORM_DEGREE:
            raise DimensionError(f"form degree {self.degree} outside 0..{MAX_FORM_DEGREE}")
        seen = set()
        terms = []
        for coef, idx in self.terms:
            idx = tuple(int(i) for i in idx)
            if len(idx) != self.degree:
                raise DimensionError(f"term {idx} does not have degree {self.degree}")
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise DimensionError(f"indices {idx} are not strictly increasing")
            if any(not 0 <= i < self.m for i in idx):
                raise DimensionError(f"indices {idx} out of range for R^{self.m}")
            if idx in seen:
                raise DimensionError(f"indices {idx} appear twice")
            seen.add(idx)
            terms.append((as_expr(coef), idx))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def from_terms(cls, degree, m, terms, coords=None):
        """Build from possibly unsorted, repeated index tuples, combining like terms."""
        merged = {}
        for coef, idx in terms:
            sign, key = _sort_with_sign(idx)
            if sign == 0:
                continue
            c = as_expr(coef)
            c = c if sign > 0 else neg(c)
            merged[key] = BinOp("+", merged[key], c) if key in merged else c
        return cls(degree, m, tuple((c, k) for k, c in sorted(merged.items())), coords)

    @classmethod
    def zero(cls, degree, m, coords=None):
        return cls(degree, m, (), coords)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for coef, idx in self.terms:
            wedge = "*".join("d" + self.coords[i] for i in idx)
            parts.append(f"{coef.format()}*{wedge}" if wedge else coef.format())
        return " + ".join(parts)

    def coefficients_at(self, point):
        """Evaluate every a_I at a point given as one ring element per coordinate."""
        env = dict(zip(self.coords, point))
        return [(coef.evaluate(env), idx) for coef, idx in self.terms]

    # -- JSON ---------------------------------------------------------------

    def to_json(self):
        return {
            "degree": self.degree,
            "dim": self.m,
            "coords": list(self.coords),
            "terms": [{"indices": list(idx), "coeff": coef.format()} for coef, idx in self.terms],
        }

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        m = data.get("dim")
        coords = data.get("coords")
        if m is None:
            m = len(coords) if coords else 1 + max((max(t["indices"], default=-1) for t in data["terms"]), default=-1)
            m = max(m, 1)
        return cls.from_terms(
            int(data["degree"]), int(m),
            [(parse(t["coeff"]), tuple(t["indices"])) for t in data["terms"]],
            tuple(coords) if coords else None,
        )


def _factors(e):
    if isinstance(e, BinOp) and e.op == "*":
        return _factors(e.left) + _factors(e.right)
    return [e]


def _summands(e, sign=1):
    if isinstance(e, BinOp) and e.op in "+-":
        right_sign = sign if e.op == "+" else -sign
        return _summands(e.left, sign) + _summands(e.right, right_sign)
    if isinstance(e, Neg):
        return _summands(e.operand, -sign)
    return [(sign, e)]


def parse_form(source, m=None, coords=None):
    """Parse text like ``"-y*dx + x*dy"`` or ``"x*dx*dy"`` into a CoordForm.

    Differentials ``d<coord>`` must appear as top-level factors of each
    summand; their left-to-right order is the wedge order.
    """
    e = parse(source)
    names = set(_all_names(e))
    if coords is None:
        numbered = [int(n.lstrip("d")[1:]) for n in names
                    if n.lstrip("d").startswith("x") and n.lstrip("d")[1:].isdigit()]
        if m is None:
            if numbered:
                m = max(numbered)
            else:
                m = 3 if names & {"z", "dz"} else (2 if names & {"y", "dy"} else 1)
        coords = tuple(f"x{i + 1}" for i in range(m)) if numbered else default_coords(m)
    coords = tuple(coords)
    m = len(coords)
    dnames = {"d" + c: i for i, c in enumerate(coords)}
    terms = []
    degree = None
    for sign, summand in _summands(e):
        idx, rest = [], []
        for fac in _factors(summand):
            if isinstance(fac, Var) and fac.name in dnames:
                idx.append(dnames[fac.name])
            else:
                if set(_all_names(fac)) & set(dnames):
                    raise ExprSyntaxError(
                        f"differentials must be top-level factors, found inside {fac.format()!r}"
                    )
                rest.append(fac)
        coef = rest[0] if rest else Num(1.0)
        for fac in rest[1:]:
            coef = BinOp("*", coef, fac)
        if sign < 0:
            coef = neg(coef)
        if degree is None:
            degree = len(idx)
        elif degree != len(idx):
            raise ExprSyntaxError("all summands of a form must have the same degree")
        terms.append((coef, tuple(idx)))
    return CoordForm.from_terms(degree or 0, m, terms, coords)


def _all_names(e):
    return variables(e, include_constants=True)


def as_form(w, m=None):
    if isinstance(w, CoordForm):
        return w
    if isinstance(w, dict):
        return CoordForm.from_json(w)
    return parse_form(w, m)


# -- evaluation on germs --------------------------------------------------------


def _det(rows):
    """Leibniz determinant; works for any ring elements, exact for 0/1 entries."""
    n = len(rows)
    if n == 0:
        return 1.0
    terms = []
    for perm, sign in permutations_with_sign(n):
        term = 1.0
        for r in range(n):
            term = term * rows[r][perm[r]]
        terms.append(term if sign > 0 else -term)
    if all(isinstance(t, float) for t in terms):
        # correctly rounded, so permuting columns flips the sign bit-exactly
        return math.fsum(terms)
    total = 0.0
    for t in terms:
        total = total + t
    return total


def form_tilde(w, germ, scalings=None):
    """omega~(germ): sum over terms of a_I(base) times the I-minor of the 1-jet."""
    w = as_form(w)
    if w.degree != germ.n:
        raise DimensionError(f"{w.degree}-form evaluated on a germ with {germ.n} arguments")
    if w.m != germ.m:
        raise DimensionError(f"form on R^{w.m} evaluated on a germ into R^{germ.m}")
    base, cols = germ.jet(scalings)
    total = 0.0
    for a, idx in w.coefficients_at(base):
        total = total + a * _det([cols[i] for i in idx])
    return total


def form_on_cube(w, cube):
    """Full value d_1...d_n * omega~(f) in the cube's ambient algebra."""
    tilde = form_tilde(w, cube.germ, cube.scalings)
    N = cube.germ.n_generators
    pref = 1.0
    for g in cube.germ.args:
        pref = pref * cube.scalings[g]
    mask = sum(1 << g for g in cube.germ.args)
    if N == 0:
        return pref * tilde
    c = np.zeros(1 << N)
    c[mask] = pref
    return MultiDual(c, N) * tilde


def eval_form(w, cube):
    """lambda_1...lambda_n * omega~(germ): the form's value on the cube
    with the symbolic product e_1...e_n stripped off."""
    w = as_form(w)
    if not isinstance(cube, InfinitesimalCube):
        raise TypeError("eval_form takes an InfinitesimalCube")
    pref = 1.0
    for lam in cube.displacements:
        pref *= lam
    tilde = form_tilde(w, cube.germ, cube.scalings)
    if isinstance(tilde, MultiDual):
        return tilde * pref
    return pref * float(tilde)


def eval_form_on_chain(w, chain):
    total = 0.0
    for coef, cube in chain:
        total = total + coef * form_on_cube(w, cube)
    return total


def exterior_derivative_sia(w, germ, tol=DEFAULT_IMPURITY_TOL):
    """d~omega(germ) from the definition: integrate omega over the boundary of
    the unit-displacement cube on ``germ`` and extract the e_1...e_{n+1} part.

    Raises ImpureInfinitesimalError when the boundary sum is not a pure
    multiple of e_1...e_{n+1}.
    """
    w = as_form(w)
    if germ.n != w.degree + 1:
        raise DimensionError(f"d of a {w.degree}-form needs a germ with {w.degree + 1} arguments")
    if not germ.is_plain:
        raise DimensionError("exterior_derivative_sia expects a fresh germ")
    cube = InfinitesimalCube((1.0,) * germ.n_generators, germ)
    total = eval_form_on_chain(w, boundary_inf(cube))
    return microcancel(total, tol)


def exterior_derivative_coord(w):
    """Classical d: sum_I sum_j (da_I/dx_j) dx_j ^ dx_I, partials by nilpotent evaluation."""
    w = as_form(w)
    if w.degree >= w.m:
        return CoordForm.zero(w.degree + 1, w.m, w.coords)
    terms = []
    for coef, idx in w.terms:
        names = coef.free_vars()
        for j, name in enumerate(w.coords):
            if j in idx or name not in names:
                continue
            terms.append((Diff(coef, name), (j,) + idx))
    return CoordForm.from_terms(w.degree + 1, w.m, terms, w.coords)


# -- integration over finite cubes ----------------------------------------------


def _integrand(w, M):
    coords = w.coords

    def fn(t):
        base, cols = M.jet(t)
        env = dict(zip(coords, base))
        total = np.zeros(t.shape[1])
        for coef, idx in w.terms:
            a = np.broadcast_to(np.asarray(coef.evaluate(env), dtype=float), total.shape)
            if idx:
                minor = np.moveaxis(cols[list(idx)], -1, 0)  # (N, n, n)
                total = total + a * np.linalg.det(minor)
            else:
                total = total + a
        return total

    return fn


def is_polynomial_pair(w, M):
    return all(is_polynomial(c) for c, _ in w.terms) and all(is_polynomial(c) for c in M.components)


def integrate_form(w, M, quad_order=DEFAULT_FORM_ORDER, cfg=None):
    """Integral of omega over a finite cube: the integral over [0,1]^n of
    omega~ applied to the jet d -> M(t + d).

    Polynomial inputs use one tensor Gauss-Legendre rule of ``quad_order``
    points per axis; anything else (or an explicit ``cfg``) is integrated
    adaptively.
    """
    w = as_form(w)
    if w.degree != M.n:
        raise DimensionError(f"{w.degree}-form integrated over a {M.n}-cube")
    if w.m != M.m:
        raise DimensionError(f"form on R^{w.m} integrated over a cube in R^{M.m}")
    if quad_order is not None and quad_order < 1:
        raise ValueError("quadrature order must be positive")
    if M.n == 0:
        point = M.point()
        return float(sum(float(a) for a, _ in w.coefficients_at(point)))
    fn = _integrand(w, M)
    lo, hi = (0.0,) * M.n, (1.0,) * M.n
    if cfg is None and quad_order is not None and is_polynomial_pair(w, M):
        return fixed_cubature(fn, lo, hi, quad_order)
    return adaptive_cubature(fn, lo, hi, cfg or DEFAULT)


def integrate_form_chain(w, chain, quad_order=DEFAULT_FORM_ORDER, cfg=None):
    return math.fsum(c * integrate_form(w, M, quad_order, cfg) for c, M in chain)


def one_form_from_field(F, coords=("x", "y", "z")):
    """F . dr as a 1-form: M dx + N dy + P dz."""
    F = [as_expr(c) for c in F]
    return CoordForm.from_terms(1, len(F), [(c, (i,)) for i, c in enumerate(F)], tuple(coords))


def two_form_from_field(F, coords=("x", "y", "z")):
    """Flux form of F on R^3: P dx^dy - N dx^dz + M dy^dz (i.e. F . n dsigma)."""
    M_, N_, P_ = [as_expr(c) for c in F]
    return CoordForm.from_terms(
        2, 3, [(P_, (0, 1)), (neg(N_), (0, 2)), (M_, (1, 2))],
        tuple(coords),
    )


__all__ = [
    "CoordForm",
    "as_form",
    "default_coords",
    "eval_form",
    "eval_form_on_chain",
    "exterior_derivative_coord",
    "exterior_derivative_sia",
    "form_on_cube",
    "form_tilde",
    "integrate_form",
    "integrate_form_chain",
    "one_form_from_field",
    "parse_form",
    "two_form_from_field",
]
