"""Command-line interface: ``siacalc <command> [options]``.

Exit codes: 0 success, 1 non-convergence or a verification gap above the
tolerance, 2 parse or usage error, 3 domain error.
"""

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import calculus, geometry, selftest, stokes, vector
from .cubes import IDENTITY_CUBES, FiniteCube
from .errors import (
    ConvergenceError,
    DegenerateParametrizationError,
    DimensionError,
    DomainError,
    ExprSyntaxError,
    NonInvertibleError,
    SolverError,
    UnboundVariableError,
)
from .expr import parse
from .forms import DEFAULT_FORM_ORDER, parse_form
from .quadrature import QuadratureConfig

TOL_ENV = "SIACALC_TOL"
DEFAULT_TOL = 1e-8

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    tol: float = DEFAULT_TOL  # pass/fail threshold for verifier gaps
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    quad_order: int = DEFAULT_FORM_ORDER
    output: str = "text"
    seed: int = selftest.DEFAULT_SEED
    quadrature: QuadratureConfig = field(init=False)

    def __post_init__(self):
        if self.output not in ("text", "json"):
            raise UsageError("output must be 'text' or 'json'")
        if not self.tol > 0:
            raise UsageError("tolerance must be positive")
        try:
            self.quadrature = QuadratureConfig(self.rel_tol, self.abs_tol)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


def _env_tol():
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"{TOL_ENV}={raw!r} is not a number") from None


# -- argument helpers -------------------------------------------------------------


def _reals(text, count=None, what="value"):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot read {what} {text!r} as comma-separated reals") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"{what} needs {count} comma-separated reals, got {len(vals)}")
    return vals


def _names(text):
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    if not names:
        raise UsageError("empty variable list")
    return names


def _components(text):
    parts = [p.strip() for p in text.split(",")]
    if any(not p for p in parts):
        raise UsageError(f"empty component in {text!r}")
    return parts


def _cube(text, dim=None):
    """A named cube or comma-separated component expressions."""
    if text in IDENTITY_CUBES:
        cube = IDENTITY_CUBES[text]
        if dim is not None and dim != cube.n:
            raise UsageError(f"cube {text} has dimension {cube.n}")
        return cube
    if text.isidentifier():
        raise UsageError(f"unknown cube {text!r}; named cubes: {', '.join(IDENTITY_CUBES)}")
    comps = _components(text)
    if dim is None:
        return FiniteCube(tuple(comps))
    return FiniteCube.of(comps, dim)


def _field(text):
    comps = _components(text)
    if len(comps) != 3:
        raise UsageError("a vector field needs three comma-separated components")
    return comps


# -- commands ---------------------------------------------------------------------
# each returns (result dict, ok flag)


def cmd_diff(a, cfg):
    if a.order == 1:
        val = calculus.derivative(a.expr, a.var, a.at)
    else:
        val = calculus.nth_derivative(a.expr, a.var, a.at, a.order)
    return {"value": val}, True


def cmd_grad(a, cfg):
    names = _names(a.vars)
    g = calculus.gradient(a.expr, names, _reals(a.at, len(names), "--at"))
    return {"gradient": dict(zip(names, g.tolist()))}, True


def cmd_integrate(a, cfg):
    lo, hi = _reals(a.interval, 2, "--interval")
    return {"value": calculus.integrate(a.expr, a.var, lo, hi, cfg.quadrature)}, True


def cmd_stationary(a, cfg):
    names = _names(a.vars)
    p = calculus.find_stationary(a.expr, names, _reals(a.guess, len(names), "--guess"))
    return {"point": dict(zip(names, p.tolist()))}, True


def cmd_constrained(a, cfg):
    names = _names(a.vars)
    guess = _reals(a.guess, len(names), "--guess")
    point, lam = calculus.constrained_stationary(a.f, a.g, a.k, names, guess)
    ok = calculus.verify_constrained(a.f, a.g, point, tol=cfg.tol, vars=names)
    return {"point": dict(zip(names, point.tolist())), "multiplier": lam, "verified": ok}, ok


def _curve(a):
    lo, hi = _reals(a.interval, 2, "--interval")
    return geometry.CurveSpec(parse(a.expr), a.var, lo, hi)


def cmd_arclength(a, cfg):
    return {"value": geometry.arclength(_curve(a), cfg.quadrature)}, True


def cmd_surface(a, cfg):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", geometry.NegativeRadiusWarning)
        val = geometry.surface_of_revolution(_curve(a), cfg.quadrature)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return {"value": val}, True


def cmd_volume(a, cfg):
    return {"value": geometry.volume_of_revolution(_curve(a), cfg.quadrature)}, True


def cmd_polar(a, cfg):
    lo, hi = _reals(a.interval, 2, "--interval")
    return {"value": geometry.polar_arclength(a.expr, lo, hi, a.var, cfg.quadrature)}, True


def cmd_catenary(a, cfg):
    if a.xs:
        xs = _reals(a.xs, what="--xs")
    else:
        xs = np.linspace(-2 * a.a, 2 * a.a, 41)
    rep = geometry.catenary_residual(a.expr, a.a, xs, a.var)
    ok = rep.max_residual <= cfg.tol
    return {
        "max_residual": rep.max_residual,
        "initial_value_gap": rep.initial_value_gap,
        "initial_slope": rep.initial_slope,
        "samples": len(rep.xs),
    }, ok


def _check(res, cfg):
    return {"lhs": res.lhs, "rhs": res.rhs, "gap": res.gap}, res.gap <= cfg.tol


def cmd_stokes(a, cfg):
    return _check(vector.verify_classical("stokes", _field(a.field), _cube(a.surface, 2),
                                          cfg.quadrature), cfg)


def cmd_divergence(a, cfg):
    return _check(vector.verify_classical("divergence", _field(a.field), _cube(a.region, 3),
                                          cfg.quadrature), cfg)


def cmd_gstokes(a, cfg):
    M = _cube(a.cube, a.dim)
    w = parse_form(a.form, M.m)
    adaptive = cfg.quadrature if a.adaptive else None
    return _check(stokes.verify_generalized_stokes(w, M, adaptive, cfg.quad_order), cfg)


def cmd_ftc(a, cfg):
    rep = stokes.ftc_case(a.expr, cfg.quadrature, n_germs=a.germs, seed=cfg.seed, var=a.var)
    ok = rep.gap <= cfg.tol and rep.germ_gap <= cfg.tol
    return {
        "integral": rep.integral,
        "difference": rep.difference,
        "gap": rep.gap,
        "germ_gap": rep.germ_gap,
        "germs": len(rep.germs),
    }, ok


def cmd_selftest(a, cfg):
    only = [int(v) for v in _reals(a.only, what="--only")] if a.only else None
    if only and any(not 1 <= k <= len(selftest.CRITERIA) for k in only):
        raise UsageError(f"criteria are numbered 1..{len(selftest.CRITERIA)}")
    results = selftest.run_all(cfg.seed, only)
    if cfg.output == "text":
        for r in results:
            print(r.line())
    out = {
        "criteria": [
            {"number": r.number, "name": r.name, "passed": r.passed, "worst": r.worst,
             "tolerance": r.tolerance, "cases": r.cases, "detail": r.detail}
            for r in results
        ],
        "passed": sum(r.passed for r in results),
        "total": len(results),
    }
    return out, all(r.passed for r in results)


# -- parser -----------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--tol", type=float, default=None,
                        help=f"gap tolerance for verifiers (default ${TOL_ENV} or {DEFAULT_TOL})")
    common.add_argument("--rel-tol", type=float, default=1e-10, help="quadrature relative tolerance")
    common.add_argument("--abs-tol", type=float, default=1e-12, help="quadrature absolute tolerance")
    common.add_argument("--order", dest="quad_order", type=int, default=DEFAULT_FORM_ORDER,
                        help="Gauss points per axis for polynomial form integrals")
    common.add_argument("--seed", type=int, default=selftest.DEFAULT_SEED, help="random seed")

    p = argparse.ArgumentParser(prog="siacalc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("diff", cmd_diff, "derivative at a point")
    sp.add_argument("--expr", required=True)
    sp.add_argument("--at", type=float, required=True)
    sp.add_argument("--var", default="x")
    sp.add_argument("--nth", dest="order", type=int, default=1, help="derivative order")

    sp = add("grad", cmd_grad, "gradient at a point")
    sp.add_argument("--expr", required=True)
    sp.add_argument("--vars", required=True)
    sp.add_argument("--at", required=True)

    sp = add("integrate", cmd_integrate, "definite integral")
    sp.add_argument("--expr", required=True)
    sp.add_argument("--interval", required=True, help="a,b (write --interval=-1,2 for negatives)")
    sp.add_argument("--var", default="x")

    sp = add("stationary", cmd_stationary, "unconstrained stationary point")
    sp.add_argument("--expr", required=True)
    sp.add_argument("--vars", required=True)
    sp.add_argument("--guess", required=True)

    sp = add("constrained", cmd_constrained, "stationary point of f on g = k")
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--k", type=float, required=True)
    sp.add_argument("--vars", required=True)
    sp.add_argument("--guess", required=True)

    for name, fn, help in [
        ("arclength", cmd_arclength, "arclength of a graph"),
        ("surface", cmd_surface, "area of the surface of revolution about the x-axis"),
        ("volume", cmd_volume, "volume of the solid of revolution"),
    ]:
        sp = add(name, fn, help)
        sp.add_argument("--expr", required=True)
        sp.add_argument("--interval", required=True)
        sp.add_argument("--var", default="x")

    sp = add("polar", cmd_polar, "arclength of r = f(theta)")
    sp.add_argument("--expr", required=True)
    sp.add_argument("--interval", required=True)
    sp.add_argument("--var", default="theta")

    sp = add("catenary", cmd_catenary, "residual of 1 + u'^2 = a^2 u''^2")
    sp.add_argument("--expr", default="a*cosh(x/a)")
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--xs", default=None, help="sample points (default: 41 points on [-2a, 2a])")
    sp.add_argument("--var", default="x")

    sp = add("stokes", cmd_stokes, "classical Stokes: flux of curl vs circulation")
    sp.add_argument("--field", required=True, help="P,Q,R")
    sp.add_argument("--surface", default="square_z0", help="named cube or x(u,v),y(u,v),z(u,v)")

    sp = add("divergence", cmd_divergence, "divergence theorem: boundary flux vs volume integral")
    sp.add_argument("--field", required=True)
    sp.add_argument("--region", default="identity3", help="named cube or x(u,v,w),y(..),z(..)")

    sp = add("gstokes", cmd_gstokes, "generalized Stokes for a coordinate form")
    sp.add_argument("--form", required=True, help='e.g. "-y*dx + x*dy"')
    sp.add_argument("--cube", required=True, help="named cube or component expressions")
    sp.add_argument("--dim", type=int, default=None, help="cube dimension if not inferable")
    sp.add_argument("--adaptive", action="store_true", help="force adaptive cubature")

    sp = add("ftc", cmd_ftc, "fundamental theorem as the 0-form case of Stokes")
    sp.add_argument("--expr", required=True)
    sp.add_argument("--germs", type=int, default=20)
    sp.add_argument("--var", default="x")

    sp = add("selftest", cmd_selftest, "run the seeded acceptance checks")
    sp.add_argument("--only", default=None, help="comma-separated criterion numbers")
    return p


def _format_text(result):
    lines = []
    for key, val in result.items():
        if key == "criteria":
            continue
        if isinstance(val, dict):
            val = ", ".join(f"{k}={v!r}" for k, v in val.items())
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{key}: {val}")
    return "\n".join(lines)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _fail(code, msg):
    print(f"siacalc: error: {msg}", file=sys.stderr)
    return code


def _glue_dash_values(argv):
    """Let option values start with '-' (``--field -y,x,0``) by rewriting the
    pair as ``--field=-y,x,0``; argparse would read the value as an option."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and tok not in _FLAGS and nxt is not None
                and nxt.startswith("-") and not nxt.startswith("--") and nxt != "-h"):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


_FLAGS = {"--json", "--adaptive", "--help"}


def run(argv=None):
    parser = build_parser()
    argv = _glue_dash_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        tol = args.tol if args.tol is not None else _env_tol()
        cfg = CliConfig(tol, args.rel_tol, args.abs_tol, args.quad_order,
                        "json" if args.json else "text", args.seed)
        result, ok = args.fn(args, cfg)
    except ExprSyntaxError as exc:
        return _fail(EXIT_USAGE, f"parse error: {exc}")
    except (UsageError, UnboundVariableError, DimensionError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    except (DomainError, NonInvertibleError, DegenerateParametrizationError) as exc:
        return _fail(EXIT_DOMAIN, f"domain error: {exc}")
    except (ConvergenceError, SolverError) as exc:
        return _fail(EXIT_NUMERIC, f"numerical failure: {exc}")
    if cfg.output == "json":
        print(json.dumps({"command": args.command, "ok": bool(ok), "result": _jsonable(result)}))
    else:
        text = _format_text(_jsonable(result))
        if text:
            print(text)
        if not ok:
            print(f"FAILED (tolerance {cfg.tol!r})")
    return EXIT_OK if ok else EXIT_NUMERIC


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
