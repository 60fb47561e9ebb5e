"""Run the seeded acceptance checks and print one line per criterion.

    python scripts/run_acceptance.py [--seed N] [--only 1,7]
"""

import argparse
import sys
import time

from siacalc.selftest import DEFAULT_SEED, run_all


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    args = p.parse_args()
    only = [int(v) for v in args.only.split(",")] if args.only else None
    start = time.perf_counter()
    results = run_all(args.seed, only)
    for r in results:
        print(r.line())
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed in {time.perf_counter() - start:.2f}s")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    sys.exit(main())
