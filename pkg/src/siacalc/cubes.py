"""Infinitesimal and finite cubes, formal chains, and the boundary operator.

An infinitesimal n-cube is a pair (displacements, germ) where the germ is a
map out of D^n.  A germ is stored as one :class:`MultiDual` per ambient
coordinate over N generators; generator i plays the role of the i-th
argument of the germ.  Taking a face substitutes ``alpha * d_i`` for that
argument.  Because d_i is itself lambda_i * e_i, a face germ keeps e_i as a
*parameter*: its base point and first-order coefficients become nilpotent,
exactly what the exterior derivative needs.

Faces are recorded lazily as a per-generator state (argument, 0 or 1) and
only materialised when a form is evaluated.  This keeps iterated faces
structurally identical regardless of the order the substitutions were made
in, so the boundary of a boundary cancels exactly.
"""

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .expr import Expr, Num, as_expr
from .nilpotent import MultiDual

ARG = None  # generator state: still an argument of the germ


def _face_sign(i, alpha):
    # i is 0-based here; the sign rule is (-1)^(i + alpha) with 1-based i
    return -1 if (i + 1 + alpha) % 2 else 1


class Germ:
    """A map out of D^n into R^m, as a multilinear coefficient family."""

    __slots__ = ("components", "state", "_key")

    def __init__(self, components, state=None):
        comps = tuple(components)
        if not comps:
            raise DimensionError("a germ needs at least one component")
        counts = {c.n for c in comps}
        if len(counts) != 1:
            raise DimensionError("germ components live in different algebras")
        n_gen = counts.pop()
        if any(c.batch_shape for c in comps):
            raise DimensionError("germ components must be scalar elements")
        self.components = comps
        self.state = tuple(state) if state is not None else (ARG,) * n_gen
        if len(self.state) != n_gen:
            raise DimensionError("state length does not match the generator count")
        self._key = None

    # -- construction -------------------------------------------------------

    @classmethod
    def from_coefficients(cls, coeffs):
        """``coeffs`` has shape (2**n, m): row k multiplies the generators in mask k."""
        coeffs = np.asarray(coeffs, dtype=float)
        n = int(round(np.log2(coeffs.shape[0])))
        return cls([MultiDual(coeffs[:, k], n) for k in range(coeffs.shape[1])])

    @classmethod
    def affine(cls, base, jacobian):
        """Germ d -> base + J d (no higher-order terms). ``jacobian`` is m x n."""
        base = np.asarray(base, dtype=float)
        jac = np.asarray(jacobian, dtype=float).reshape(len(base), -1)
        n = jac.shape[1]
        coeffs = np.zeros((1 << n, len(base)))
        coeffs[0] = base
        for j in range(n):
            coeffs[1 << j] = jac[:, j]
        return cls.from_coefficients(coeffs)

    @classmethod
    def from_exprs(cls, exprs, params, at):
        """Jet at ``at`` of the map params -> exprs: evaluate at ``at_i + e_i``."""
        params = tuple(params)
        n = len(params)
        env = {p: MultiDual.constant(float(v), n) + MultiDual.generator(i, n)
               for i, (p, v) in enumerate(zip(params, at))}
        comps = []
        for e in exprs:
            v = as_expr(e).evaluate(env)
            comps.append(v if isinstance(v, MultiDual) else MultiDual.constant(float(v), n))
        return cls(comps)

    # -- shape --------------------------------------------------------------

    @property
    def n_generators(self):
        return len(self.state)

    @property
    def args(self):
        """Generator indices that are still arguments, in order."""
        return tuple(i for i, s in enumerate(self.state) if s is ARG)

    @property
    def n(self):
        return len(self.args)

    @property
    def m(self):
        return len(self.components)

    @property
    def is_plain(self):
        """True when no argument has been substituted (a fresh germ)."""
        return all(s is ARG for s in self.state)

    def key(self):
        if self._key is None:
            data = b"".join(c.coeffs.tobytes() for c in self.components)
            self._key = (data, self.state)
        return self._key

    def __eq__(self, other):
        return isinstance(other, Germ) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Germ(n={self.n}, m={self.m}, state={self.state})"

    # -- faces and evaluation -------------------------------------------------

    def face(self, k, alpha):
        """Substitute ``alpha * d`` into argument ``k`` (0-based among the arguments)."""
        if alpha not in (0, 1):
            raise ValueError("face parameter alpha must be 0 or 1")
        gen = self.args[k]
        state = list(self.state)
        state[gen] = alpha
        return Germ(self.components, state)

    def materialize(self, scalings):
        """Components with every substitution applied.

        ``scalings`` holds lambda_i for every generator; generator i set to 1
        contributes lambda_i * e_i, set to 0 contributes nothing.
        """
        weights = []
        for i, s in enumerate(self.state):
            weights.append(1.0 if s is ARG else (0.0 if s == 0 else float(scalings[i])))
        size = 1 << len(weights)
        mult = np.ones(size)
        for mask in range(size):
            w = 1.0
            for i in range(len(weights)):
                if mask >> i & 1:
                    w *= weights[i]
            mult[mask] = w
        return [MultiDual(c.coeffs * mult, c.n) for c in self.components]

    def jet(self, scalings=None):
        """Base point and first-order coefficients in the germ's arguments.

        Returns ``(base, columns)`` where ``base[k]`` and ``columns[k][j]``
        are elements of the ambient algebra that involve only parameter
        generators (reals, for a plain germ).
        """
        if self.is_plain:
            base = [c.coefficient(0) for c in self.components]
            cols = [[c.coefficient(1 << g) for g in self.args] for c in self.components]
            return base, cols
        scalings = scalings if scalings is not None else (1.0,) * self.n_generators
        comps = self.materialize(scalings)
        arg_mask = sum(1 << g for g in self.args)
        size = 1 << self.n_generators
        param_masks = [m for m in range(size) if m & arg_mask == 0]
        base, cols = [], []
        for c in comps:
            b = np.zeros(size)
            b[param_masks] = c.coeffs[param_masks]
            base.append(MultiDual(b, c.n))
            row = []
            for g in self.args:
                col = np.zeros(size)
                col[param_masks] = c.coeffs[[m | (1 << g) for m in param_masks]]
                row.append(MultiDual(col, c.n))
            cols.append(row)
        return base, cols

    def __call__(self, *xs):
        """Evaluate the germ at ring elements ``xs`` (one per argument)."""
        if len(xs) != self.n:
            raise DimensionError(f"germ takes {self.n} arguments, got {len(xs)}")
        comps = self.materialize((1.0,) * self.n_generators)
        args = self.args
        out = []
        for c in comps:
            total = 0.0
            for mask in range(c.size):
                coef = c.coeffs[mask]
                if coef == 0.0:
                    continue
                term = coef
                rest = 0
                for pos, g in enumerate(args):
                    if mask >> g & 1:
                        term = term * xs[pos]
                for g in range(c.n):
                    if g not in args and mask >> g & 1:
                        rest |= 1 << g
                if rest:
                    term = term * _monomial(rest, c.n)
                total = total + term
            out.append(total)
        return out


def _monomial(mask, n):
    c = np.zeros(1 << n)
    c[mask] = 1.0
    return MultiDual(c, n)


@dataclass(frozen=True, eq=False)
class InfinitesimalCube:
    """(d, germ) with d_i = scalings[i] * e_i.

    ``scalings`` carries one entry per generator of the germ, including
    generators already substituted away (faces still need their lambda).
    """

    scalings: tuple
    germ: Germ

    def __post_init__(self):
        s = tuple(float(v) for v in self.scalings)
        if len(s) != self.germ.n_generators:
            raise DimensionError(
                f"{len(s)} scalings for a germ on {self.germ.n_generators} generators"
            )
        object.__setattr__(self, "scalings", s)

    @property
    def n(self):
        return self.germ.n

    @property
    def m(self):
        return self.germ.m

    @property
    def displacements(self):
        """The lambda_i of the remaining arguments."""
        return tuple(self.scalings[g] for g in self.germ.args)

    def key(self):
        return ("inf", self.scalings, self.germ.key())

    def faces(self):
        if self.n == 0:
            raise DimensionError("a 0-cube has no boundary")
        for k in range(self.n):
            for alpha in (0, 1):
                yield _face_sign(k, alpha), InfinitesimalCube(self.scalings, self.germ.face(k, alpha))

    def point(self):
        """A 0-cube's location (nilpotent coordinates allowed)."""
        if self.n:
            raise DimensionError("only 0-cubes are points")
        return self.germ.materialize(self.scalings)


def _default_params(n):
    return {0: (), 1: ("t",), 2: ("u", "v"), 3: ("u", "v", "w")}.get(
        n, tuple(f"t{i + 1}" for i in range(n))
    )


@dataclass(frozen=True)
class FiniteCube:
    """A map from [0, 1]^n into R^m given by m expressions in the parameters."""

    components: tuple
    params: tuple = None

    def __post_init__(self):
        comps = tuple(as_expr(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if self.params is None:
            used = set().union(*(c.free_vars() for c in comps)) if comps else set()
            if "w" in used:
                n = 3
            elif used & {"u", "v"}:
                n = 2
            else:
                n = 1 if "t" in used else 0
            object.__setattr__(self, "params", _default_params(n))
        else:
            object.__setattr__(self, "params", tuple(self.params))

    @classmethod
    def of(cls, components, n):
        return cls(tuple(components), _default_params(n))

    @property
    def n(self):
        return len(self.params)

    @property
    def m(self):
        return len(self.components)

    def key(self):
        return ("fin", self.components, self.params)

    def faces(self):
        if self.n == 0:
            raise DimensionError("a 0-cube has no boundary")
        for k, p in enumerate(self.params):
            rest = self.params[:k] + self.params[k + 1:]
            for alpha in (0, 1):
                comps = tuple(c.substitute({p: Num(float(alpha))}) for c in self.components)
                yield _face_sign(k, alpha), FiniteCube(comps, rest)

    def evaluate(self, t):
        """Points M(t) for nodes ``t`` of shape (n, N); returns an (m, N) array."""
        t = np.asarray(t, dtype=float)
        env = dict(zip(self.params, t))
        shape = t.shape[1:] if t.ndim > 1 else (1,)
        return np.array([np.broadcast_to(np.asarray(c.evaluate(env), float), shape)
                         for c in self.components])

    def jet(self, t):
        """Base points (m, N) and first-order coefficients (m, n, N) of
        d -> M(t + d) at each node, from one n-generator evaluation."""
        t = np.asarray(t, dtype=float)
        n = self.n
        N = t.shape[1]
        env = {p: MultiDual.constant(t[i], n) + MultiDual.generator(i, n)
               for i, p in enumerate(self.params)}
        base = np.zeros((self.m, N))
        cols = np.zeros((self.m, n, N))
        for k, c in enumerate(self.components):
            v = c.evaluate(env)
            if isinstance(v, MultiDual):
                base[k] = v.coeffs[0]
                for j in range(n):
                    cols[k, j] = v.coeffs[1 << j]
            else:
                base[k] = v
        return base, cols

    def point(self):
        if self.n:
            raise DimensionError("only 0-cubes are points")
        return [float(c.evaluate({})) for c in self.components]

    def to_json(self):
        return {"dims": self.n, "params": list(self.params),
                "components": [c.format() for c in self.components]}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        n = int(data["dims"])
        params = tuple(data.get("params") or _default_params(n))
        if len(params) != n:
            raise DimensionError(f"{n}-cube declared with parameters {params}")
        return cls(tuple(data["components"]), params)


@dataclass(frozen=True)
class ChainFormal:
    """A formal real-linear combination of cubes."""

    terms: tuple = field(default_factory=tuple)

    @classmethod
    def of(cls, cube, coef=1.0):
        return cls(((float(coef), cube),))

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __add__(self, other):
        return ChainFormal(self.terms + other.terms).normalized()

    def __neg__(self):
        return ChainFormal(tuple((-c, q) for c, q in self.terms))

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, s):
        return ChainFormal(tuple((s * c, q) for c, q in self.terms)).normalized()

    def is_empty(self):
        return not self.terms

    def normalized(self):
        """Merge structurally identical cubes and drop zero coefficients."""
        order, coef, cubes = [], {}, {}
        for c, q in self.terms:
            k = q.key()
            if k not in coef:
                order.append(k)
                coef[k] = 0.0
                cubes[k] = q
            coef[k] += c
        return ChainFormal(tuple((coef[k], cubes[k]) for k in order if coef[k] != 0.0))

    def boundary(self):
        terms = []
        for c, q in self.terms:
            for sign, face in q.faces():
                terms.append((sign * c, face))
        return ChainFormal(tuple(terms)).normalized()


def _as_chain(x):
    return x if isinstance(x, ChainFormal) else ChainFormal.of(x)


def boundary_inf(c):
    """Boundary of an infinitesimal cube (or chain of them)."""
    return _as_chain(c).boundary()


def boundary_finite(M):
    """Boundary of a finite cube (or chain of them): 2n signed faces."""
    return _as_chain(M).boundary()


def random_germ(rng, n, m, scale=1.0):
    """Germ with every multilinear coefficient drawn from N(0, scale^2)."""
    return Germ.from_coefficients(rng.normal(scale=scale, size=(1 << n, m)))


IDENTITY_CUBES = {
    "identity1": FiniteCube.of(["t"], 1),
    "identity2": FiniteCube.of(["u", "v"], 2),
    "identity3": FiniteCube.of(["u", "v", "w"], 3),
    "square_z0": FiniteCube.of(["u", "v", "0"], 2),
    "cube3": FiniteCube.of(["u", "v", "w"], 3),
}


def permutations_with_sign(n):
    """Every permutation of range(n) with its sign, via inversion count."""
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        yield perm, (-1) ** inv


__all__ = [
    "ChainFormal",
    "FiniteCube",
    "Germ",
    "IDENTITY_CUBES",
    "InfinitesimalCube",
    "boundary_finite",
    "boundary_inf",
    "permutations_with_sign",
    "random_germ",
]
