"""Minimal-surface can of fixed volume: sweep volumes and starting guesses,
confirm the optimal height is always twice the radius."""

import argparse
import math

import numpy as np

from siacalc import ConvergenceError, constrained_stationary, verify_constrained

AREA = "2*pi*r*h + 2*pi*r^2"
VOLUME = "pi*r^2*h"


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=12)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'volume':>10} {'guess':>18} {'r':>12} {'h':>12} {'h/r':>16} {'lambda':>10} verified")
    worst = 0.0
    for _ in range(args.cases):
        k = float(rng.uniform(1, 200))
        guess = tuple(rng.uniform(0.5, 4, 2))
        try:
            (r, h), lam = constrained_stationary(AREA, VOLUME, k, ("r", "h"), guess)
        except ConvergenceError as exc:
            print(f"{k:10.4f} ({guess[0]:6.3f}, {guess[1]:6.3f}) no convergence: {exc}")
            continue
        ok = verify_constrained(AREA, VOLUME, (r, h), vars=("r", "h"))
        worst = max(worst, abs(h / r - 2))
        print(f"{k:10.4f} ({guess[0]:6.3f}, {guess[1]:6.3f}) {r:12.8f} {h:12.8f} "
              f"{h / r:16.13f} {lam:10.6f} {ok}")
    # closed form: r = (k / 2 pi)^(1/3)
    print(f"worst |h/r - 2| = {worst:.3e}; r at k=16*pi: "
          f"{constrained_stationary(AREA, VOLUME, 16 * math.pi, ('r', 'h'), (1, 1)).point[0]:.15g}")


if __name__ == "__main__":
    main()
