"""Command-line interface.

Subcommands:
  gen    -- print points, one per line, tab-separated
  bench  -- raw generation throughput for one generator
  libor  -- caplet convergence experiment, CSV report
  mbs    -- MBS convergence experiment, CSV report

Exit codes: 0 success, 1 configuration error, 2 runtime/model error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness, models


def parse_n_grid(text: str) -> tuple[int, ...]:
    """Accept `2^10..2^18` (power range), or a comma list like
    `1024,2048,4096` (entries may also use 2^k)."""

    def one(tok: str) -> int:
        tok = tok.strip()
        if "^" in tok:
            base, exp = tok.split("^")
            return int(base) ** int(exp)
        return int(tok)

    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        lo_v, hi_v = one(lo), one(hi)
        if "^" in lo and "^" in hi and lo.split("^")[0] == hi.split("^")[0]:
            b = int(lo.split("^")[0])
            e0, e1 = int(lo.split("^")[1]), int(hi.split("^")[1])
            return tuple(b**e for e in range(e0, e1 + 1))
        # plain endpoints: doubling grid
        grid = []
        n = lo_v
        while n <= hi_v:
            grid.append(n)
            n *= 2
        return tuple(grid)
    return tuple(one(t) for t in text.split(","))


def _add_experiment_args(p: argparse.ArgumentParser):
    p.add_argument("--generator", required=True,
                   help="comma-separated generator names: " + ", ".join(harness.GENERATOR_NAMES))
    p.add_argument("--n-grid", default="2^10..2^18", help="sample sizes, e.g. 2^10..2^18")
    p.add_argument("--reps", type=int, default=50, help="independent replications M")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--paradigm", choices=harness.PARADIGMS, default="replication-parallel")
    p.add_argument("--out", required=True, help="report CSV path (summary written alongside)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rqmcbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="print points to stdout")
    g.add_argument("--generator", required=True, choices=harness.GENERATOR_NAMES)
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--replication", type=int, default=0)

    b = sub.add_parser("bench", help="generation throughput")
    b.add_argument("--generator", required=True, choices=harness.GENERATOR_NAMES)
    b.add_argument("--dim", type=int, required=True)
    b.add_argument("--count", type=int, required=True, help="coordinates per run")
    b.add_argument("--runs", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)

    li = sub.add_parser("libor", help="caplet convergence experiment")
    _add_experiment_args(li)
    li.add_argument("--curve", help="yield curve CSV (tenor_years,rate_percent)")

    mb = sub.add_parser("mbs", help="MBS convergence experiment")
    _add_experiment_args(mb)

    return parser


def _run_gen(args) -> int:
    sampler = harness.make_sampler(args.generator, args.dim, args.seed, args.replication)
    remaining = args.count
    while remaining > 0:
        block = np.empty((min(remaining, harness.CHUNK_PATHS), args.dim))
        sampler.fill(block)
        sys.stdout.write(
            "\n".join("\t".join(f"{x:.17g}" for x in row) for row in block) + "\n"
        )
        remaining -= block.shape[0]
    return 0


def _run_bench(args) -> int:
    rate = harness.bench_throughput(
        args.generator, args.dim, args.count, runs=args.runs, seed=args.seed
    )
    print(f"{args.generator}\tdim={args.dim}\t{rate:.6g} numbers/s")
    return 0


def _run_experiment(args, model: str) -> int:
    curve = None
    if model == "libor" and args.curve:
        curve = models.load_yield_curve(args.curve)
    reports = []
    for gen in args.generator.split(","):
        config = harness.ExperimentConfig(
            model=model,
            generator=gen.strip(),
            n_grid=parse_n_grid(args.n_grid),
            replications=args.reps,
            seed=args.seed,
            workers=args.workers,
            paradigm=args.paradigm,
        )
        reports.append(harness.run_experiment(config, curve=curve))
    merged = harness.merge_reports(reports)
    harness.write_report(merged, args.out)
    for s in merged.slopes:
        print(f"{s.generator}\t{s.model}\tslope {s.slope:+.4f}\tresidual {s.residual:.4f}")
    print(f"report: {args.out}\nsummary: {harness.summary_path(args.out)}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return _run_gen(args)
        if args.command == "bench":
            return _run_bench(args)
        return _run_experiment(args, args.command)
    except (harness.ConfigurationError, ValueError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - surface as runtime failure
        print(f"runtime error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
