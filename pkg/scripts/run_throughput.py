#!/usr/bin/env python3
"""Single-thread generation throughput for every generator.

Prints a small table (median of --runs timed runs each); the interesting
comparisons are recursive vs counter-based Rasrap and Gray-code vs
counter-based Sobol'.
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from rqmcbench import harness  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=4)
    ap.add_argument("--count", type=int, default=10**7, help="coordinates per run")
    ap.add_argument("--runs", type=int, default=5)
    args = ap.parse_args()

    rates = {}
    for gen in harness.GENERATOR_NAMES:
        count = args.count if gen != "kakutani" else min(args.count, 10**6)
        rates[gen] = harness.bench_throughput(gen, args.dim, count, runs=args.runs)
        print(f"{gen:17s} {rates[gen] / 1e6:9.1f} M numbers/s")
    print(f"\nrecursive/counter Rasrap ratio: "
          f"{rates['rasrap-recursive'] / rates['rasrap-counter']:.1f}x")
    print(f"Gray/counter Sobol ratio:       "
          f"{rates['sobol-gray'] / rates['sobol-counter']:.1f}x")


if __name__ == "__main__":
    main()
