#!/usr/bin/env python3
"""Desk-scale convergence comparison for both pricing models.

Writes one report CSV (plus slope summary) per model into --outdir and
prints the fitted convergence exponents. With default settings this is
the same configuration the acceptance suite checks (N = 2^10..2^18,
M = 50) and takes ~10 minutes on two cores.
"""

import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from rqmcbench import harness  # noqa: E402

MODEL_GENERATORS = {
    "libor": ("twister", "rasrap-recursive", "sobol-gray"),
    "mbs": ("philox", "xorwow", "sobol-gray", "rasrap-recursive"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--n-grid", default="2^10..2^18")
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--seed", type=int, default=20120224)
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()

    from rqmcbench.cli import parse_n_grid

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = parse_n_grid(args.n_grid)

    for model, generators in MODEL_GENERATORS.items():
        reports = []
        for gen in generators:
            t0 = time.perf_counter()
            cfg = harness.ExperimentConfig(
                model=model, generator=gen, n_grid=grid,
                replications=args.reps, seed=args.seed, workers=args.workers,
            )
            rep = harness.run_experiment(cfg)
            wall = time.perf_counter() - t0
            s = rep.slopes[0]
            print(f"{model:5s} {gen:17s} slope {s.slope:+.3f} "
                  f"(residual {s.residual:.2f}, {wall:.1f}s)")
            reports.append(rep)
        dest = outdir / f"{model}_convergence.csv"
        harness.write_report(harness.merge_reports(reports), dest)
        print(f"  -> {dest} and {harness.summary_path(dest)}")


if __name__ == "__main__":
    main()
