"""Experiment drivers: parameter sweeps, residual curves, SKM vs block Kaczmarz.

Timings are wall-clock seconds from a monotonic clock around the solve loop;
instance generation and file output are not timed. Medians are the
headline statistic.
"""

import csv
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import FeasibilityProblem
from .problems import stack_equalities
from .solvers import (
    BlockConfig,
    HaltingRule,
    SkmConfig,
    block_kaczmarz_solve,
    skm_solve,
    warmup,
)

CSV_HEADER = "beta,lambda,trial,seed,iterations,wall_seconds,final_residual,halted_reason"
DEFAULT_TIME_LIMIT = 300.0


@dataclass(frozen=True)
class SweepSpec:
    beta_grid: tuple
    lambda_grid: tuple
    trials: int = 1
    halting: HaltingRule = field(default_factory=HaltingRule)
    time_limit: float = DEFAULT_TIME_LIMIT
    seed_base: int = 0
    max_iterations: int = 1_000_000
    stride: int | str = "auto"
    jobs: int = 1

    def __post_init__(self):
        if not self.beta_grid or not self.lambda_grid:
            raise ValueError("grids must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


@dataclass(frozen=True)
class SweepRecord:
    beta: int
    lam: float
    trial: int
    seed: int
    iterations: int
    wall_seconds: float
    final_residual: float
    halted_reason: str


def _summary(values):
    values = [float(v) for v in values]
    return {
        "median": statistics.median(values),
        "mean": statistics.fmean(values),
        "std": statistics.pstdev(values),
    }


def aggregate(records):
    """Median, mean and population std of time and iterations per (beta, lambda) cell."""
    cells = {}
    for r in records:
        cells.setdefault((r.beta, r.lam), []).append(r)
    return {
        key: {
            "wall_seconds": _summary(r.wall_seconds for r in rs),
            "iterations": _summary(r.iterations for r in rs),
            "trials": len(rs),
        }
        for key, rs in cells.items()
    }


@dataclass
class SweepResult:
    records: list
    aggregates: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.aggregates:
            self.aggregates = aggregate(self.records)

    def median_time(self, beta, lam):
        return self.aggregates[(beta, lam)]["wall_seconds"]["median"]


def _run_trials(jobs, tasks):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda f: f(), tasks))
    return [f() for f in tasks]


def run_sweep(p, spec, x0=None):
    """Solve ``p`` for every (beta, lambda, trial) cell of ``spec``.

    Trial ``t`` uses seed ``seed_base + t`` in every cell. Runs that exceed
    ``spec.time_limit`` are recorded with ``halted_reason == "timeout"``.
    """
    for beta in spec.beta_grid:
        if not 1 <= beta <= p.m:
            raise ValueError(f"beta={beta} outside [1, {p.m}]")
    warmup()

    def task(beta, lam, trial):
        seed = spec.seed_base + trial
        cfg = SkmConfig(beta=beta, lam=lam, max_iterations=spec.max_iterations,
                        halting=spec.halting, seed=seed, stride=spec.stride)

        def run():
            tr = skm_solve(p, cfg, x0, time_limit=spec.time_limit)
            return SweepRecord(beta, float(lam), trial, seed, tr.n_iterations,
                               tr.wall_seconds, tr.final_residual, tr.halted_reason)
        return run

    tasks = [task(beta, lam, t) for beta in spec.beta_grid for lam in spec.lambda_grid
             for t in range(spec.trials)]
    return SweepResult(_run_trials(spec.jobs, tasks))


@dataclass
class ResidualCurve:
    """Iteration- and time-indexed residual series of one run."""

    beta: int
    lam: float
    seed: int
    iterations: np.ndarray
    elapsed: np.ndarray
    residual_norms: np.ndarray
    satisfied_fraction: np.ndarray | None
    distance_to_witness: np.ndarray | None


def residual_curves(p, configs, x0=None, witness=None):
    """Run each configuration from the shared ``x0`` and return its curves.

    With a ``witness`` (a known feasible point) the distance from every
    recorded iterate to it is included.
    """
    warmup()
    curves = []
    for cfg in configs:
        tr = skm_solve(p, cfg, x0, keep_iterates=witness is not None)
        frac = None
        if tr.satisfied_counts is not None:
            frac = tr.satisfied_counts / p.m
        dist = None
        if witness is not None:
            dist = np.linalg.norm(tr.iterates - np.asarray(witness)[None, :], axis=1)
        curves.append(ResidualCurve(cfg.beta, cfg.lam, cfg.seed, tr.iterations, tr.elapsed,
                                    tr.residual_norms, frac, dist))
    return curves


@dataclass(frozen=True)
class ComparisonRecord:
    method: str
    parameter: int
    stride: int | str
    lam: float
    trial: int
    seed: int
    iterations: int
    wall_seconds: float
    final_residual: float
    halted_reason: str


@dataclass
class Comparison:
    records: list

    def medians(self):
        """Median time per ``(method, parameter, stride, lam)``."""
        cells = {}
        for r in self.records:
            cells.setdefault((r.method, r.parameter, r.stride, r.lam), []).append(r.wall_seconds)
        return {k: statistics.median(v) for k, v in cells.items()}

    def best(self, method):
        """Smallest median time of ``method`` among runs that all converged."""
        cells = {}
        for r in self.records:
            if r.method == method:
                cells.setdefault((r.parameter, r.stride, r.lam), []).append(r)
        times = [statistics.median(x.wall_seconds for x in rs)
                 for rs in cells.values()
                 if all(x.halted_reason == "threshold" for x in rs)]
        return min(times) if times else math.inf


def compare_block_kaczmarz(A, b, skm_cfgs, bk_cfgs, trials=1, seed_base=0, time_limit=60.0):
    """Time SKM on ``[A; -A] x <= [b; -b]`` against block Kaczmarz on ``A x = b``.

    Every configuration runs ``trials`` times with seeds ``seed_base + t``;
    the seed fields of the given configs are ignored. Both methods see the
    same residual, since ``||([A; -A] x - [b; -b])^+|| = ||A x - b||``.
    """
    stacked = stack_equalities(A, b)
    warmup()
    records = []
    for t in range(trials):
        seed = seed_base + t
        for cfg in skm_cfgs:
            tr = skm_solve(stacked, replace(cfg, seed=seed), time_limit=time_limit)
            records.append(ComparisonRecord("SKM", cfg.beta, cfg.stride, float(cfg.lam), t, seed,
                                            tr.n_iterations, tr.wall_seconds,
                                            tr.final_residual, tr.halted_reason))
        for cfg in bk_cfgs:
            tr = block_kaczmarz_solve(A, b, replace(cfg, seed=seed), time_limit=time_limit)
            records.append(ComparisonRecord("BK", cfg.block_size, cfg.stride, float(cfg.lam), t, seed,
                                            tr.n_iterations, tr.wall_seconds,
                                            tr.final_residual, tr.halted_reason))
    return Comparison(records)


# --- output -----------------------------------------------------------------------


def _g17(v):
    return format(float(v), ".17g")


def emit_csv(result, path):
    """Write sweep records, one per line, under :data:`CSV_HEADER`."""
    if not result.records:
        raise ValueError("nothing to write: result has no records")
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in result.records:
            fh.write(",".join([str(r.beta), _g17(r.lam), str(r.trial), str(r.seed),
                               str(r.iterations), _g17(r.wall_seconds),
                               _g17(r.final_residual), r.halted_reason]) + "\n")


def read_csv(path):
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\r\n")
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        return [
            SweepRecord(int(row[0]), float(row[1]), int(row[2]), int(row[3]), int(row[4]),
                        float(row[5]), float(row[6]), row[7])
            for row in csv.reader(fh)
            if row
        ]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def emit_plot(result, path):
    """SVG chart of median time to threshold against beta, one line per lambda."""
    if not result.aggregates:
        raise ValueError("nothing to plot: result has no aggregates")
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for lam in sorted({lam for _, lam in result.aggregates}):
        betas = sorted(beta for beta, l in result.aggregates if l == lam)
        times = [result.median_time(beta, lam) for beta in betas]
        ax.plot(betas, times, marker="o", label=f"lambda = {lam:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sample size beta")
    ax.set_ylabel("median time to threshold [s]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_curves(curves, path, x="iterations"):
    """SVG chart of residual norm (log scale) against iterations or time."""
    if not curves:
        raise ValueError("nothing to plot: no curves")
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in curves:
        xs = c.iterations if x == "iterations" else c.elapsed
        ys = np.maximum(c.residual_norms, np.finfo(float).tiny)
        ax.plot(xs, ys, label=f"beta = {c.beta}, lambda = {c.lam:g}")
    ax.set_yscale("log")
    ax.set_xlabel("iteration" if x == "iterations" else "time [s]")
    ax.set_ylabel("||(Ax - b)^+||")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
