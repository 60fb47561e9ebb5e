"""Catenary residuals and arclength against a*sinh(x/a) for a range of a,
plus a few non-solutions for contrast."""

import argparse
import math

import numpy as np

from siacalc import CurveSpec, arclength, catenary_residual


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=41)
    args = p.parse_args()
    print(f"{'a':>6} {'max residual':>14} {'u(0)-a':>10} {'u`(0)':>8} {'arclength err':>14}")
    for a in (0.25, 0.5, 1.0, 2.0, 3.0, 5.0):
        xs = np.linspace(-2 * a, 2 * a, args.points)
        rep = catenary_residual("a*cosh(x/a)", a, xs)
        err = max(abs(arclength(CurveSpec(f"{a!r}*cosh(x/{a!r})", "x", 0, x)) - a * math.sinh(x / a))
                  for x in xs[xs > 0])
        print(f"{a:6.2f} {rep.max_residual:14.3e} {rep.initial_value_gap:10.2e} "
              f"{rep.initial_slope:8.1e} {err:14.3e}")
    print("\nnot catenaries (a = 1):")
    for u in ["1 + x^2/2", "cos(x)", "exp(x)"]:
        rep = catenary_residual(u, 1.0, np.linspace(-1, 1, 11))
        print(f"  {u:12s} max residual {rep.max_residual:.3e}")


if __name__ == "__main__":
    main()
