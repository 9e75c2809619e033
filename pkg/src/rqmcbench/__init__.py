"""Randomized quasi-Monte Carlo generators and financial pricing
benchmarks: Rasrap (random-start randomly permuted Halton), scrambled
Sobol', pseudorandom baselines, LIBOR caplet and MBS models, and a
replication/convergence harness."""

from .harness import (
    ConvergenceReport,
    ExperimentConfig,
    bench_throughput,
    make_sampler,
    run_experiment,
    write_report,
)

__all__ = [
    "ConvergenceReport",
    "ExperimentConfig",
    "bench_throughput",
    "make_sampler",
    "run_experiment",
    "write_report",
]

__version__ = "0.1.0"
