"""Differentiation by nilpotent evaluation, quadrature, and stationary-point solvers."""

import math
from typing import NamedTuple

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateConstraintError,
    DimensionError,
    DomainError,
    NonInvertibleError,
    SolverError,
)
from .expr import as_expr, variables
from .nilpotent import MAX_GENERATORS, MicroVector, MultiDual
from .quadrature import DEFAULT, QuadratureConfig, quad

MAX_NEWTON_ITERATIONS = 100


def _callable(f, var, env):
    """Turn an expression (or a plain callable) into a one-argument function."""
    if callable(f) and not hasattr(f, "free_vars"):
        return f
    e = as_expr(f)
    base = dict(env or {})

    def fn(x):
        base[var] = x
        return e.evaluate(base)

    return fn


def derivative(f, var="x", x0=0.0, env=None):
    """f'(x0): evaluate at ``x0 + e`` and read off the coefficient of ``e``.

    ``f`` is an expression (text or tree) or any callable that accepts a
    :class:`MultiDual`; ``env`` binds the remaining free variables.
    """
    out = _callable(f, var, env)(MultiDual.variable(x0))
    if not isinstance(out, MultiDual):
        return 0.0 * np.asarray(out) if np.ndim(out) else 0.0
    return out.coefficient((0,))


def nth_derivative(f, var="x", x0=0.0, k=1, env=None):
    """f^(k)(x0) as the coefficient of e_0...e_{k-1} in f(x0 + e_0 + ... + e_{k-1})."""
    if k < 1:
        raise DimensionError("derivative order must be at least 1")
    if k > MAX_GENERATORS:
        raise DimensionError(f"derivative order {k} exceeds the generator cap {MAX_GENERATORS}")
    x = MultiDual.constant(x0, k)
    for i in range(k):
        x = x + MultiDual.generator(i, k)
    out = _callable(f, var, env)(x)
    if not isinstance(out, MultiDual):
        return 0.0
    return out.coefficient((1 << k) - 1)


def _bind(vars, point, env):
    bound = dict(env or {})
    bound.update(zip(vars, point))
    return bound


def gradient(f, vars, p, env=None):
    """Gradient by a single evaluation over MicroVector inputs (one slot per variable)."""
    vars = tuple(vars)
    if len(vars) != len(p):
        raise DimensionError(f"{len(vars)} variables but a point of length {len(p)}")
    e = as_expr(f)
    seeds = [MicroVector.seed(p, i) for i in range(len(p))]
    out = e.evaluate(_bind(vars, seeds, env))
    if not isinstance(out, MicroVector):
        return np.zeros(len(p))
    return np.array(out.grad, dtype=float)


def hessian(f, vars, p, env=None):
    """Matrix of second partials, all pairs at once.

    Each entry is the e_0 e_1 coefficient of f(p + e_0 u_i + e_1 u_j); the pairs
    (i, j) ride along as a batch axis so there is one evaluation in total.
    """
    vars = tuple(vars)
    n = len(vars)
    e = as_expr(f)
    idx_i, idx_j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    idx_i, idx_j = idx_i.ravel(), idx_j.ravel()
    inputs = []
    for k in range(n):
        c = np.zeros((4, n * n))
        c[0] = p[k]
        c[1] = (idx_i == k).astype(float)
        c[2] = (idx_j == k).astype(float)
        inputs.append(MultiDual(c, 2))
    out = e.evaluate(_bind(vars, inputs, env))
    if not isinstance(out, MultiDual):
        return np.zeros((n, n))
    return np.array(np.broadcast_to(out.coeffs[3], (n * n,))).reshape(n, n)


def integrate(f, var="x", a=0.0, b=1.0, cfg=DEFAULT, env=None):
    """Oriented integral of ``f`` from ``a`` to ``b`` by adaptive Gauss quadrature."""
    fn = _callable(f, var, env)
    return quad(lambda t: np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape), a, b, cfg)


class Antiderivative:
    """x -> integral of f from ``lower`` to x, usable over nilpotent inputs.

    Over a :class:`MultiDual` argument the value is lifted through its jet
    ``[F(x0), f(x0), f'(x0), ...]``, i.e. the antiderivative's derivative is
    f by construction, which is what makes it the unique primitive.
    """

    def __init__(self, f, var="x", lower=0.0, cfg=DEFAULT, env=None):
        self.expr = as_expr(f)
        self.var = var
        self.lower = float(lower)
        self.cfg = cfg
        self.env = dict(env or {})

    def _value(self, x):
        return integrate(self.expr, self.var, self.lower, x, self.cfg, self.env)

    def __call__(self, x):
        if not isinstance(x, MultiDual):
            return self._value(float(x))
        if x.batch_shape:
            raise DimensionError("Antiderivative lifts scalar jets only")
        x0 = float(x.standard_part)
        jet = [self._value(x0), float(self.expr.evaluate({**self.env, self.var: x0}))]
        for k in range(1, x.n):
            jet.append(nth_derivative(self.expr, self.var, x0, k, self.env))
        u = x.nilpotent_part
        total = MultiDual.constant(jet[0], x.n)
        term = None
        for j in range(1, x.n + 1):
            term = u if term is None else term * u
            total = total + term * (jet[j] / math.factorial(j))
        return total


def is_stationary(f, vars, p, tol=1e-8, env=None):
    """Literal check: f(p + d) = f(p) for d in D(n), i.e. every gradient slot vanishes."""
    vars = tuple(vars)
    seeds = [MicroVector.seed(p, i) for i in range(len(p))]
    out = as_expr(f).evaluate(_bind(vars, seeds, env))
    if not isinstance(out, MicroVector):
        return True
    base = as_expr(f).evaluate(_bind(vars, [float(v) for v in p], env))
    return abs(out.value - base) <= tol and bool(np.all(np.abs(out.grad) <= tol))


def _newton_step(jac, rhs):
    if not np.all(np.isfinite(jac)):
        raise SolverError("non-finite Jacobian")
    try:
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > 1e14:
            raise SolverError(f"singular Newton system (condition number {cond:.3e})")
        return np.linalg.solve(jac, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular Newton system: {exc}") from exc


def _damped_newton(residual, jacobian, z0, tol, max_iter):
    """Newton on residual(z) = 0 with backtracking on the 2-norm of the residual."""
    z = np.array(z0, dtype=float)
    r = residual(z)
    norm = float(np.linalg.norm(r))
    for it in range(max_iter):
        if norm <= tol:
            return z, it
        step = _newton_step(jacobian(z), -r)
        t = 1.0
        while True:
            trial = z + t * step
            try:
                r_trial = residual(trial)
                n_trial = float(np.linalg.norm(r_trial))
            except (DomainError, NonInvertibleError):
                n_trial = math.inf
            if n_trial <= (1.0 - 1e-4 * t) * norm or t < 1e-10:
                break
            t *= 0.5
        if not math.isfinite(n_trial):
            raise ConvergenceError("Newton iteration left the domain of the function")
        z, r, norm = trial, r_trial, n_trial
    if norm <= tol:
        return z, max_iter
    raise ConvergenceError(
        f"Newton iteration did not converge in {max_iter} steps (residual {norm:.3e})"
    )


def find_stationary(f, vars, guess, tol=1e-10, env=None, max_iter=MAX_NEWTON_ITERATIONS):
    """Point where the gradient vanishes, by damped Newton from ``guess``.

    Which stationary point is found depends on the guess.
    """
    vars = tuple(vars)
    guess = np.atleast_1d(np.asarray(guess, dtype=float))
    if len(vars) != len(guess):
        raise DimensionError(f"{len(vars)} variables but a guess of length {len(guess)}")
    point, _ = _damped_newton(
        lambda z: gradient(f, vars, z, env),
        lambda z: hessian(f, vars, z, env),
        guess,
        tol,
        max_iter,
    )
    return point


class ConstrainedPoint(NamedTuple):
    point: np.ndarray
    multiplier: float


def constrained_stationary(
    f, g, k, vars, guess, tol=1e-10, env=None, max_iter=MAX_NEWTON_ITERATIONS
):
    """Stationary point of f on the level set g = k.

    Solves the square system grad f - lam * grad g = 0, g = k by damped Newton;
    the multiplier starts from the least-squares fit at the guess.
    """
    vars = tuple(vars)
    n = len(vars)
    guess = np.atleast_1d(np.asarray(guess, dtype=float))
    if n != len(guess):
        raise DimensionError(f"{n} variables but a guess of length {len(guess)}")
    f, g = as_expr(f), as_expr(g)
    gg = gradient(g, vars, guess, env)
    if not np.any(gg):
        raise DegenerateConstraintError("constraint gradient vanishes at the guess")
    lam0 = float(np.dot(gradient(f, vars, guess, env), gg) / np.dot(gg, gg))

    def residual(z):
        x, lam = z[:n], z[n]
        r = gradient(f, vars, x, env) - lam * gradient(g, vars, x, env)
        gval = float(g.evaluate(_bind(vars, [float(v) for v in x], env)))
        return np.append(r, gval - k)

    def jacobian(z):
        x, lam = z[:n], z[n]
        gg = gradient(g, vars, x, env)
        jac = np.zeros((n + 1, n + 1))
        jac[:n, :n] = hessian(f, vars, x, env) - lam * hessian(g, vars, x, env)
        jac[:n, n] = -gg
        jac[n, :n] = gg
        return jac

    z, _ = _damped_newton(residual, jacobian, np.append(guess, lam0), tol, max_iter)
    x = z[:n]
    if not np.any(gradient(g, vars, x, env)):
        raise DegenerateConstraintError("constraint gradient vanishes at the solution")
    return ConstrainedPoint(x, float(z[n]))


def constraint_directions(g, vars, p, env=None):
    """Orthonormal basis of the null space of grad g(p): the first-order directions
    along which g stays on its level set."""
    gg = gradient(g, vars, p, env)
    norm = np.linalg.norm(gg)
    if norm == 0:
        raise DegenerateConstraintError("constraint gradient vanishes")
    _, _, vt = np.linalg.svd(gg[None, :] / norm)
    return vt[1:]


def verify_constrained(f, g, p, tol=1e-8, vars=None, env=None):
    """Check the constrained-stationarity definition at ``p``.

    For each null-space direction v of grad g, the perturbation p + v d with
    d in D keeps g fixed to first order, and f(p + v d) must equal f(p).
    Both facts are read off MicroVector evaluations.
    """
    f, g = as_expr(f), as_expr(g)
    if vars is None:
        vars = [v for v in dict.fromkeys(variables(f) + variables(g)) if v not in (env or {})]
    vars = tuple(vars)
    p = np.asarray(p, dtype=float)
    basis = constraint_directions(g, vars, p, env)
    scale = max(1.0, float(np.linalg.norm(gradient(g, vars, p, env))))
    for v in basis:
        moved = [MicroVector(p[i], [v[i]]) for i in range(len(vars))]
        env_d = _bind(vars, moved, env)
        dg = g.evaluate(env_d)
        dg = dg.grad[0] if isinstance(dg, MicroVector) else 0.0
        if abs(dg) > 1e-9 * scale:
            raise SolverError("null-space direction does not preserve the constraint")
        df = f.evaluate(env_d)
        df = df.grad[0] if isinstance(df, MicroVector) else 0.0
        if abs(df) > tol:
            return False
    return True


__all__ = [
    "Antiderivative",
    "ConstrainedPoint",
    "QuadratureConfig",
    "constrained_stationary",
    "constraint_directions",
    "derivative",
    "find_stationary",
    "gradient",
    "hessian",
    "integrate",
    "is_stationary",
    "nth_derivative",
    "verify_constrained",
]
