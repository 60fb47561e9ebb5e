"""Generalized Stokes on random polynomial forms and cube maps, plus the
classical curved-surface cases; reports the gap distribution per form degree."""

import argparse
from collections import defaultdict

import numpy as np

from siacalc import FiniteCube, verify_classical, verify_generalized_stokes
from siacalc.selftest import (
    DIVERGENCE_FIELDS,
    DIVERGENCE_REGIONS,
    STOKES_FIELDS,
    STOKES_SURFACES,
    random_poly_cube,
    random_poly_form,
)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=60)
    p.add_argument("--wobble", type=float, default=0.3, help="size of the nonlinear part of the cube maps")
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    gaps = defaultdict(list)
    for j in range(args.cases):
        deg = j % 3
        m = int(rng.integers(deg + 1, 4))
        w = random_poly_form(rng, deg, m)
        M = random_poly_cube(rng, deg + 1, m, args.wobble)
        gaps[(deg, m)].append(verify_generalized_stokes(w, M).gap)
    print("degree  dim  cases  max gap     median gap")
    for (deg, m), g in sorted(gaps.items()):
        print(f"{deg:6d} {m:4d} {len(g):6d}  {max(g):.3e}   {np.median(g):.3e}")
    print("\nclassical Stokes on curved surfaces")
    for (name, S), F in zip(STOKES_SURFACES, STOKES_FIELDS):
        r = verify_classical("stokes", F, FiniteCube.of(S, 2))
        print(f"  {name:18s} lhs={r.lhs: .12f} rhs={r.rhs: .12f} gap={r.gap:.2e}")
    print("\ndivergence theorem on curved regions")
    for (name, R), F in zip(DIVERGENCE_REGIONS, DIVERGENCE_FIELDS):
        r = verify_classical("divergence", F, FiniteCube.of(R, 3))
        print(f"  {name:18s} lhs={r.lhs: .12f} rhs={r.rhs: .12f} gap={r.gap:.2e}")


if __name__ == "__main__":
    main()
