"""Replication engine: runs M independently randomized estimates per
sample size, in replication-parallel or stride-parallel execution, and
aggregates grand averages, sample standard deviations, timings,
efficiencies and fitted convergence slopes into CSV reports.

Determinism contract: every estimate is a pure function of
(seed, generator, replication, path index). Payoffs land in an array
indexed by path and are reduced with one fixed-order sum, so estimates
and standard deviations are bit-identical across worker counts and
across the two execution paradigms; only wall-clock columns vary.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import halton, models, prng, sobol
from .seeding import GENERATOR_IDS, derive_key

CHUNK_PATHS = 8192


class ConfigurationError(ValueError):
    """Invalid experiment setup (CLI exit code 1)."""


# ---------------------------------------------------------------------------
# Samplers: one replication's randomized point stream
# ---------------------------------------------------------------------------


class _WordSampler:
    """Uniforms from a word generator via the (w + 1/2) / 2**32 map."""

    counter_based = False

    def __init__(self, gen, dim: int):
        self._gen = gen
        self.dim = dim

    def fill(self, out: np.ndarray) -> None:
        words = np.empty(out.shape, dtype=np.uint32)
        self._gen.fill_words(words)
        np.multiply(words, 2.0**-32, out=out)
        out += 2.0**-33


class _PhiloxSampler:
    """Counter-based uniforms: word j of path i is keyed to (seed, m, i, j)."""

    counter_based = True

    def __init__(self, key: int, dim: int):
        self._paths = prng.PhiloxPaths(key)
        self.dim = dim
        self._next = 0

    def fill(self, out: np.ndarray) -> None:
        words = self._paths.words_for(self._next, out.shape[0], self.dim)
        self._next += out.shape[0]
        np.multiply(words, 2.0**-32, out=out)
        out += 2.0**-33

    def at(self, indices: np.ndarray) -> np.ndarray:
        u = self._paths.words_at(indices, self.dim) * 2.0**-32
        u += 2.0**-33
        return u


_SOBOL_TABLES: dict[int, sobol.SobolTable] = {}


def _sobol_base_table(dim: int) -> sobol.SobolTable:
    if dim not in _SOBOL_TABLES:
        _SOBOL_TABLES[dim] = sobol.default_table(dim)
    return _SOBOL_TABLES[dim]


GENERATOR_NAMES = (
    "twister",
    "xorwow",
    "philox",
    "rasrap-recursive",
    "rasrap-counter",
    "sobol-gray",
    "sobol-counter",
    "kakutani",
)

# generators whose points are pure functions of the index
COUNTER_BASED = frozenset({"philox", "rasrap-counter", "sobol-counter"})


def make_sampler(name: str, dim: int, seed: int, replication: int):
    """Fresh, independently randomized sampler for one replication.

    All randomization (PRNG seeds and keys, Rasrap starts and digit
    permutations, Sobol' scrambles) is derived from
    (seed, generator family, replication), never from the sample size.
    """
    if name not in GENERATOR_NAMES:
        raise ConfigurationError(f"unknown generator {name!r}")
    family = name.split("-")[0]
    key = derive_key(seed, GENERATOR_IDS[family], replication)
    if name == "twister":
        return _WordSampler(prng.MT19937(key & 0xFFFFFFFF), dim)
    if name == "xorwow":
        return _WordSampler(prng.Xorwow(key), dim)
    if name == "philox":
        return _PhiloxSampler(key, dim)
    if name == "rasrap-recursive":
        return halton.RasrapRecursive(dim, key)
    if name == "rasrap-counter":
        return halton.RasrapCounter(dim, key)
    if name == "kakutani":
        return halton.KakutaniSampler(dim, key)
    table = sobol.sobol_randomize(_sobol_base_table(dim), key, replication)
    if name == "sobol-gray":
        return sobol.SobolGray(table)
    return sobol.SobolCounter(table)


def build_model(name: str, curve: models.YieldCurve | None = None):
    if name == "libor":
        return models.LiborModel(curve=curve)
    if name == "mbs":
        return models.MbsModel()
    if name == "const1":
        return models.ConstantModel()
    if name == "x1":
        return models.FirstCoordinateModel()
    raise ConfigurationError(f"unknown model {name!r}")


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def sample_std(values) -> float:
    """Square root of the unbiased sample variance."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ValueError("need at least two values")
    return float(np.std(v, ddof=1))


def fit_slope(points) -> tuple[float, float, float]:
    """OLS fit of log std against log N.

    Points with std == 0 are excluded; fewer than three surviving points
    is an error. Returns (slope, intercept, max |residual|).
    """
    kept = [(n, s) for n, s in points if s > 0.0]
    if len(kept) < 3:
        raise ValueError("need at least three points with positive std")
    x = np.log(np.array([n for n, _ in kept], dtype=np.float64))
    y = np.log(np.array([s for _, s in kept]))
    design = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return float(coef[0]), float(coef[1]), float(np.abs(resid).max())


def assign_stride(worker: int, worker_count: int, k: int) -> int:
    """Global index of the k-th path handled by `worker` of `worker_count`."""
    if not 0 <= worker < worker_count:
        raise ValueError("worker must be in [0, worker_count)")
    return worker + k * worker_count


# ---------------------------------------------------------------------------
# Experiment configuration and report
# ---------------------------------------------------------------------------


PARADIGMS = ("replication-parallel", "stride-parallel")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    generator: str
    n_grid: tuple[int, ...]
    replications: int = 50
    seed: int = 0
    workers: int = 1
    paradigm: str = "replication-parallel"

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigurationError("n_grid must be a nonempty list of positive sizes")
        if any(b >= a for a, b in zip(self.n_grid[1:], self.n_grid)):
            raise ConfigurationError("n_grid must be strictly increasing")
        if self.replications < 2:
            raise ConfigurationError("need at least two replications")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.paradigm not in PARADIGMS:
            raise ConfigurationError(f"unknown paradigm {self.paradigm!r}")
        if self.generator not in GENERATOR_NAMES:
            raise ConfigurationError(f"unknown generator {self.generator!r}")
        if self.paradigm == "stride-parallel" and self.generator not in COUNTER_BASED:
            raise ConfigurationError(
                f"stride-parallel requires a counter-based generator, "
                f"not {self.generator!r}"
            )


@dataclass(frozen=True)
class ReplicationResult:
    replication: int
    estimate: float
    seconds: float

    def __post_init__(self):
        if not math.isfinite(self.estimate):
            raise ArithmeticError(
                f"replication {self.replication} produced a non-finite estimate"
            )


@dataclass(frozen=True)
class GridRow:
    generator: str
    model: str
    n: int
    replications: int
    mean: float
    std: float
    seconds: float
    efficiency: float


@dataclass(frozen=True)
class SlopeFit:
    generator: str
    model: str
    slope: float
    intercept: float
    residual: float


@dataclass
class ConvergenceReport:
    rows: list[GridRow] = field(default_factory=list)
    slopes: list[SlopeFit] = field(default_factory=list)
    # per-replication results keyed by (generator, n); kept for downstream
    # statistics, not serialized
    replications: dict = field(default_factory=dict)

    def row(self, generator: str, n: int) -> GridRow:
        for r in self.rows:
            if r.generator == generator and r.n == n:
                return r
        raise KeyError((generator, n))

    def estimates(self, generator: str, n: int) -> np.ndarray:
        return np.array([r.estimate for r in self.replications[(generator, n)]])


def merge_reports(reports) -> ConvergenceReport:
    out = ConvergenceReport()
    for r in reports:
        out.rows.extend(r.rows)
        out.slopes.extend(r.slopes)
        out.replications.update(r.replications)
    return out


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def _checkpoints(n_grid: tuple[int, ...]) -> list[int]:
    """Chunk boundaries: every grid size plus CHUNK_PATHS multiples."""
    n_max = n_grid[-1]
    marks = set(n_grid)
    marks.update(range(CHUNK_PATHS, n_max + 1, CHUNK_PATHS))
    marks.add(n_max)
    return sorted(marks)


def _run_replication(config: ExperimentConfig, model, m: int):
    """One replication: evaluate n_max paths, snapshot at grid boundaries.

    The estimate for each grid size N is the mean of the first N payoffs
    of this replication's stream (the randomization does not depend on N,
    so smaller sizes are prefixes by construction).
    """
    n_grid = config.n_grid
    payoffs = np.empty(n_grid[-1])
    times = {}
    start = time.perf_counter()
    sampler = make_sampler(config.generator, model.dim, config.seed, m)
    buf = np.empty((CHUNK_PATHS, model.dim))
    done = 0
    for mark in _checkpoints(n_grid):  # consecutive marks are <= CHUNK apart
        count = mark - done
        if count:
            chunk = buf[:count]
            sampler.fill(chunk)
            payoffs[done:mark] = model.payoffs(chunk)
            done = mark
        if mark in n_grid:
            times[mark] = time.perf_counter() - start
    estimates = {n: float(np.sum(payoffs[:n]) / n) for n in n_grid}
    return estimates, times


def _run_replication_strided(config: ExperimentConfig, model, m: int, n: int):
    """One (replication, N) in the stride paradigm: workers own the
    interleaved index sets {w, w+W, ...} and write disjoint slots of the
    shared payoff array; the reduction stays one fixed-order sum."""
    workers = config.workers
    payoffs = np.empty(n)
    start = time.perf_counter()
    sampler = make_sampler(config.generator, model.dim, config.seed, m)

    def stripe(w: int):
        indices = np.arange(w, n, workers)
        for lo in range(0, indices.size, CHUNK_PATHS):
            idx = indices[lo : lo + CHUNK_PATHS]
            payoffs[idx] = model.payoffs(sampler.at(idx))

    if workers == 1:
        stripe(0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(stripe, range(workers)))
    estimate = float(np.sum(payoffs) / n)
    return estimate, time.perf_counter() - start


def run_experiment(config: ExperimentConfig, curve=None, model=None) -> ConvergenceReport:
    """Run the full replication grid for one (generator, model) pair."""
    model = model if model is not None else build_model(config.model, curve)
    reps = range(1, config.replications + 1)
    est = {n: np.empty(config.replications) for n in config.n_grid}
    sec = {n: np.empty(config.replications) for n in config.n_grid}

    if config.paradigm == "replication-parallel":
        if config.workers == 1:
            results = [_run_replication(config, model, m) for m in reps]
        else:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(lambda m: _run_replication(config, model, m), reps))
        for i, (estimates, times) in enumerate(results):
            for n in config.n_grid:
                est[n][i] = estimates[n]
                sec[n][i] = times[n]
    else:
        for n in config.n_grid:
            for i, m in enumerate(reps):
                est[n][i], sec[n][i] = _run_replication_strided(config, model, m, n)

    report = ConvergenceReport()
    std_points = []
    for n in config.n_grid:
        std = sample_std(est[n])
        mean_sec = float(np.mean(sec[n]))
        report.rows.append(
            GridRow(
                generator=config.generator,
                model=model.name,
                n=n,
                replications=config.replications,
                mean=float(np.mean(est[n])),
                std=std,
                seconds=mean_sec,
                efficiency=std * mean_sec,
            )
        )
        report.replications[(config.generator, n)] = tuple(
            ReplicationResult(m, float(e), float(s))
            for m, e, s in zip(reps, est[n], sec[n])
        )
        std_points.append((n, std))
    try:
        slope, intercept, residual = fit_slope(std_points)
        report.slopes.append(
            SlopeFit(config.generator, model.name, slope, intercept, residual)
        )
    except ValueError:
        pass  # degenerate integrand (all stds zero): no slope row
    return report


# ---------------------------------------------------------------------------
# Throughput benchmark
# ---------------------------------------------------------------------------


def bench_throughput(generator: str, dim: int, count: int, runs: int = 5, seed: int = 0):
    """Median raw-generation throughput in coordinates per second.

    Generates ceil(count/dim) points per run through the same block
    interface the harness uses; an accumulating sink consumes every block
    so generation cannot be skipped.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    npoints = max(1, math.ceil(count / dim))
    sampler = make_sampler(generator, dim, seed, 0)
    buf = np.empty((min(npoints, CHUNK_PATHS), dim))
    sink = 0.0
    sampler.fill(buf[: min(128, buf.shape[0])])  # warm-up (jit, tables)
    rates = []
    for _ in range(runs):
        remaining = npoints
        t0 = time.perf_counter()
        while remaining > 0:
            block = buf[: min(remaining, buf.shape[0])]
            sampler.fill(block)
            sink += float(block[0, 0]) + float(block[-1, -1])
            remaining -= block.shape[0]
        dt = time.perf_counter() - t0
        rates.append(npoints * dim / dt)
    rates.sort()
    if not math.isfinite(sink):
        raise ArithmeticError("generator produced non-finite coordinates")
    return rates[len(rates) // 2]


# ---------------------------------------------------------------------------
# CSV reporting
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_report(report: ConvergenceReport, destination) -> None:
    """Write the per-N rows to `destination` and the slope summary next
    to it (suffix `_summary.csv`). Values carry 12 significant digits."""
    destination = str(destination)
    try:
        with open(destination, "w") as f:
            f.write("generator,model,N,M,mean,std,time_s,efficiency\n")
            for r in report.rows:
                f.write(
                    f"{r.generator},{r.model},{r.n},{r.replications},"
                    f"{_fmt(r.mean)},{_fmt(r.std)},{_fmt(r.seconds)},{_fmt(r.efficiency)}\n"
                )
        summary = summary_path(destination)
        with open(summary, "w") as f:
            f.write("generator,model,slope,residual\n")
            for s in report.slopes:
                f.write(f"{s.generator},{s.model},{_fmt(s.slope)},{_fmt(s.residual)}\n")
    except OSError as e:
        raise OSError(f"failed writing report to {destination}: {e}") from e


def summary_path(destination) -> str:
    destination = str(destination)
    stem = destination[: -len(".csv")] if destination.endswith(".csv") else destination
    return stem + "_summary.csv"
