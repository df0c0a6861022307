"""Sampling Kaczmarz-Motzkin iterations and the block Kaczmarz baseline.

The inner loop lives in a numba kernel so that the cost of one iteration
scales with the number of sampled rows, the way the method's cost model
assumes. Everything around it (sampling draws, halting checks, traces) is
plain numpy.

Sampling draws come from a :class:`numpy.random.Generator` (PCG64) seeded
per run. Each iteration consumes exactly ``beta`` uniform doubles (none when
``beta == m``), which Floyd's algorithm turns into a uniformly random
``beta``-subset. Stepping one iteration at a time with :func:`skm_step` and
running :func:`skm_solve` therefore visit the same rows for the same seed.
"""

import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np

from .linalg import FeasibilityProblem, _as_matrix, _as_vector

#: Default halting threshold on ``||(Ax - b)^+||_2``.
DEFAULT_THRESHOLD = 2.0**-14
DEFAULT_MAX_ITERATIONS = 100_000

_HALTING_KINDS = (
    "residual_norm",
    "relative_residual_norm",
    "relative_max_violation",
    "certificate",
    "iteration_cap",
)


@dataclass(frozen=True)
class HaltingRule:
    """When to stop a run.

    ``residual_norm``
        ``||(Ax_k - b)^+||_2 <= threshold``.
    ``relative_residual_norm``
        ``||(Ax_k - b)^+||_2 <= threshold * ||(Ax_0 - b)^+||_2``.
    ``relative_max_violation``
        ``max(Ax_k - b) <= threshold * max(Ax_0 - b)``.
    ``certificate``
        ``max(0, max(Ax_k - b)) < threshold`` (strict).
    ``iteration_cap``
        never; the run stops at ``max_iterations``.
    """

    kind: str = "residual_norm"
    threshold: float | None = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.kind not in _HALTING_KINDS:
            raise ValueError(f"unknown halting rule {self.kind!r}")
        if self.kind == "iteration_cap":
            object.__setattr__(self, "threshold", None)
        elif self.threshold is None or not self.threshold > 0:
            raise ValueError("halting threshold must be positive")

    @classmethod
    def residual_norm(cls, threshold=DEFAULT_THRESHOLD):
        return cls("residual_norm", threshold)

    @classmethod
    def relative_residual_norm(cls, threshold):
        return cls("relative_residual_norm", threshold)

    @classmethod
    def relative_max_violation(cls, threshold):
        return cls("relative_max_violation", threshold)

    @classmethod
    def certificate(cls, threshold):
        return cls("certificate", threshold)

    @classmethod
    def iteration_cap(cls):
        return cls("iteration_cap", None)

    def reached(self, res_norm, max_raw, res_norm0, max_raw0):
        """Evaluate the rule from the current and initial residual summaries."""
        kind = self.kind
        if kind == "residual_norm":
            return res_norm <= self.threshold
        if kind == "relative_residual_norm":
            return res_norm <= self.threshold * res_norm0
        if kind == "relative_max_violation":
            if max_raw0 <= 0:
                return True
            return max_raw <= self.threshold * max_raw0
        if kind == "certificate":
            return max(0.0, max_raw) < self.threshold
        return False


@dataclass(frozen=True)
class SkmConfig:
    """Parameters of one SKM run.

    ``stride`` sets how many iterations pass between halting checks and
    trace records: an integer, or ``"auto"`` for ``ceil(m / beta)``, which
    spends about as much on the O(mn) residual evaluation as on the
    iterations between two checks, whatever ``beta`` is.
    """

    beta: int = 1
    lam: float = 1.0
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    halting: HaltingRule = field(default_factory=HaltingRule)
    seed: int = 0
    track_satisfied: bool = False
    stride: int | str = 1

    def __post_init__(self):
        if int(self.beta) != self.beta or self.beta < 1:
            raise ValueError(f"beta must be a positive integer, got {self.beta!r}")
        if not 0 < self.lam <= 2:
            raise ValueError(f"lambda must lie in (0, 2], got {self.lam!r}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.stride != "auto" and (int(self.stride) != self.stride or self.stride < 1):
            raise ValueError(f"stride must be a positive integer or 'auto'")

    def stride_for(self, m):
        if self.stride == "auto":
            return max(1, math.ceil(m / self.beta))
        return int(self.stride)


@dataclass(frozen=True)
class BlockConfig:
    block_size: int = 1
    lam: float = 1.0
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    halting: HaltingRule = field(default_factory=HaltingRule)
    seed: int = 0
    stride: int = 1

    def __post_init__(self):
        if int(self.block_size) != self.block_size or self.block_size < 1:
            raise ValueError("block_size must be a positive integer")
        if not 0 < self.lam <= 2:
            raise ValueError(f"lambda must lie in (0, 2], got {self.lam!r}")
        if self.stride < 1:
            raise ValueError("stride must be positive")


@dataclass
class IterateState:
    x: np.ndarray
    iteration: int
    selected: int
    violation: float


@dataclass
class RunTrace:
    """Everything recorded during a run.

    The per-record arrays (``iterations``, ``residual_norms``,
    ``max_violations``, ``satisfied_counts``, ``elapsed``) share one length;
    a record is taken at iteration 0, every ``stride`` iterations after that
    and at the final iterate. ``selected`` and ``violations`` hold the row
    (or block) picked at every iteration and its raw violation
    ``a_t^T x - b_t`` before the step.
    """

    iterations: np.ndarray
    residual_norms: np.ndarray
    max_violations: np.ndarray
    satisfied_counts: np.ndarray | None
    elapsed: np.ndarray
    x: np.ndarray
    halted_reason: str
    seed: int
    selected: np.ndarray
    violations: np.ndarray
    iterates: np.ndarray | None = None

    @property
    def n_iterations(self):
        return int(self.iterations[-1])

    @property
    def final_residual(self):
        return float(self.residual_norms[-1])

    @property
    def wall_seconds(self):
        return float(self.elapsed[-1])

    @property
    def converged(self):
        return self.halted_reason in ("threshold", "certificate")


@numba.njit(cache=True, nogil=True)
def _floyd_sample(m, beta, u, out, mark):
    # Floyd's algorithm: uniform beta-subset of range(m) from beta draws.
    c = 0
    for j in range(m - beta, m):
        t = int(u[c] * (j + 1))
        if t > j:
            t = j
        if mark[t]:
            t = j
        mark[t] = True
        out[c] = t
        c += 1
    for c in range(beta):
        mark[out[c]] = False


@numba.njit(cache=True, nogil=True)
def _skm_kernel(A, b, norms_sq, x, beta, lam, u, count, selected, violations, offset):
    m, n = A.shape
    chosen = np.empty(beta, dtype=np.int64)
    mark = np.zeros(m, dtype=np.bool_)
    for k in range(count):
        best = -np.inf
        bi = -1
        if beta == m:
            for i in range(m):
                v = -b[i]
                for j in range(n):
                    v += A[i, j] * x[j]
                if v > best:
                    best = v
                    bi = i
        else:
            _floyd_sample(m, beta, u[k], chosen, mark)
            for c in range(beta):
                i = chosen[c]
                v = -b[i]
                for j in range(n):
                    v += A[i, j] * x[j]
                if v > best or (v == best and i < bi):
                    best = v
                    bi = i
        selected[offset + k] = bi
        violations[offset + k] = best
        if best > 0.0:
            step = lam * best / norms_sq[bi]
            for j in range(n):
                x[j] -= step * A[bi, j]


@numba.njit(cache=True, nogil=True)
def _frozen(A, b, norms_sq, x, lam):
    # True when the step the kernel would take for any row leaves every
    # coordinate of x unchanged, so no future iteration can move it
    m, n = A.shape
    for i in range(m):
        v = -b[i]
        for j in range(n):
            v += A[i, j] * x[j]
        if v > 0.0:
            step = lam * v / norms_sq[i]
            for j in range(n):
                if x[j] - step * A[i, j] != x[j]:
                    return False
    return True


def _draws(rng, count, beta, m):
    if beta == m:
        return np.empty((count, 0))
    return rng.random((count, beta))


def sample_constraints(m, beta, rng):
    """Uniformly random ``beta``-subset of ``range(m)``, sorted ascending.

    Consumes ``beta`` doubles from ``rng`` unless ``beta == m``.
    """
    if not 1 <= beta <= m:
        raise ValueError(f"need 1 <= beta <= m, got beta={beta}, m={m}")
    if beta == m:
        return np.arange(m)
    out = np.empty(beta, dtype=np.int64)
    _floyd_sample(m, beta, rng.random(beta), out, np.zeros(m, dtype=np.bool_))
    return np.sort(out)


def select_max_violation(p, x, tau):
    """Row of ``tau`` maximizing ``a_i^T x - b_i`` and that raw value.

    Ties go to the lowest row index.
    """
    tau = np.sort(np.asarray(tau, dtype=np.int64))
    if tau.size == 0:
        raise ValueError("empty sample")
    vals = p.A[tau] @ np.asarray(x, dtype=float) - p.b[tau]
    i = int(np.argmax(vals))
    return int(tau[i]), float(vals[i])


def _start_point(n, x0):
    if x0 is None:
        return np.zeros(n)
    x = np.array(x0, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({n},)")
    return x


def _check_beta(p, cfg):
    if cfg.beta > p.m:
        raise ValueError(f"beta={cfg.beta} exceeds the number of rows m={p.m}")


def skm_step(p, x, cfg, rng, iteration=0):
    """One SKM iteration from ``x``; returns the new :class:`IterateState`."""
    _check_beta(p, cfg)
    x = _start_point(p.n, x)
    sel = np.empty(1, dtype=np.int64)
    vio = np.empty(1)
    _skm_kernel(
        p.A, p.b, p.row_norms_sq, x, cfg.beta, float(cfg.lam),
        _draws(rng, 1, cfg.beta, p.m), 1, sel, vio, 0,
    )
    return IterateState(x=x, iteration=iteration + 1, selected=int(sel[0]),
                        violation=float(vio[0]))


class _Recorder:
    def __init__(self, track_satisfied, keep_iterates):
        self.track = track_satisfied
        self.keep = keep_iterates
        self.its, self.norms, self.maxes, self.sats, self.times = [], [], [], [], []
        self.xs = []

    def add(self, k, raw, elapsed, x):
        pos = np.maximum(raw, 0.0)
        norm = math.sqrt(float(np.dot(pos, pos)))
        mx = float(raw.max())
        self.its.append(k)
        self.norms.append(norm)
        self.maxes.append(max(0.0, mx))
        if self.track:
            self.sats.append(int(np.count_nonzero(raw <= 0)))
        self.times.append(elapsed)
        if self.keep:
            self.xs.append(x.copy())
        return norm, mx

    def trace(self, x, reason, seed, selected, violations):
        return RunTrace(
            iterations=np.asarray(self.its, dtype=np.int64),
            residual_norms=np.asarray(self.norms),
            max_violations=np.asarray(self.maxes),
            satisfied_counts=np.asarray(self.sats, dtype=np.int64) if self.track else None,
            elapsed=np.asarray(self.times),
            x=x,
            halted_reason=reason,
            seed=seed,
            selected=selected,
            violations=violations,
            iterates=np.asarray(self.xs) if self.keep else None,
        )


def skm_solve(p, cfg, x0=None, *, time_limit=None, keep_iterates=False):
    """Run the SKM method on ``p`` until ``cfg.halting`` fires.

    Parameters
    ----------
    p : FeasibilityProblem
    cfg : SkmConfig
    x0 : array_like, optional
        Starting point, zero by default.
    time_limit : float, optional
        Wall-clock budget in seconds; exceeding it ends the run with
        ``halted_reason == "timeout"``.
    keep_iterates : bool
        Store the iterate at every record in ``trace.iterates``.

    Returns
    -------
    RunTrace
        ``halted_reason`` is one of ``"threshold"``, ``"certificate"``,
        ``"iteration-cap"`` or ``"timeout"``. Under the certificate rule a
        run also ends with ``"stalled"`` once every possible step rounds
        away in floating point, since the iterate can then never change.
    """
    _check_beta(p, cfg)
    A, b, nsq = p.A, p.b, p.row_norms_sq
    m = p.m
    x = _start_point(p.n, x0)
    rng = np.random.default_rng(cfg.seed)
    stride = cfg.stride_for(m)
    cap = int(cfg.max_iterations)
    sel_parts, vio_parts = [], []
    rec = _Recorder(cfg.track_satisfied, keep_iterates)
    halting = cfg.halting
    done = "threshold" if halting.kind != "certificate" else "certificate"

    t0 = time.perf_counter()
    norm0, max0 = rec.add(0, A @ x - b, 0.0, x)
    reason = done if halting.reached(norm0, max0, norm0, max0) else None
    k = 0
    while reason is None:
        if k >= cap:
            reason = "iteration-cap"
            break
        count = min(stride, cap - k)
        sel = np.empty(count, dtype=np.int64)
        vio = np.empty(count)
        _skm_kernel(A, b, nsq, x, cfg.beta, float(cfg.lam),
                    _draws(rng, count, cfg.beta, m), count, sel, vio, 0)
        sel_parts.append(sel)
        vio_parts.append(vio)
        k += count
        raw = A @ x - b
        elapsed = time.perf_counter() - t0
        norm, mx = rec.add(k, raw, elapsed, x)
        if halting.reached(norm, mx, norm0, max0):
            reason = done
        elif halting.kind == "certificate" and _frozen(A, b, nsq, x, float(cfg.lam)):
            reason = "stalled"
        elif time_limit is not None and elapsed > time_limit:
            reason = "timeout"
    return rec.trace(x, reason, cfg.seed, _join(sel_parts, np.int64), _join(vio_parts, float))


def _join(parts, dtype):
    if not parts:
        return np.empty(0, dtype=dtype)
    return np.concatenate(parts).astype(dtype, copy=False)


def motzkin_solve(p, lam=1.0, halting=None, x0=None, *,
                  max_iterations=DEFAULT_MAX_ITERATIONS, stride=1, **kwargs):
    """Motzkin's relaxation method: SKM with the full sample ``beta = m``."""
    cfg = SkmConfig(beta=p.m, lam=lam, max_iterations=max_iterations,
                    halting=halting or HaltingRule(), stride=stride)
    return skm_solve(p, cfg, x0, **kwargs)


def randomized_kaczmarz_solve(p, lam=1.0, halting=None, x0=None, seed=0, *,
                              max_iterations=DEFAULT_MAX_ITERATIONS, stride=1, **kwargs):
    """Randomized Kaczmarz for inequalities: SKM with ``beta = 1``.

    Rows are drawn uniformly, not proportionally to their squared norms.
    """
    cfg = SkmConfig(beta=1, lam=lam, max_iterations=max_iterations,
                    halting=halting or HaltingRule(), seed=seed, stride=stride)
    return skm_solve(p, cfg, x0, **kwargs)


def block_partition(m, block_size, rng):
    """Random partition of ``range(m)`` into ``ceil(m / block_size)`` blocks.

    Consumes the same draws as the partition built inside
    :func:`block_kaczmarz_solve` for the same generator state.
    """
    if not 1 <= block_size <= m:
        raise ValueError(f"need 1 <= block_size <= m, got {block_size}")
    perm = rng.permutation(m)
    return [perm[i:i + block_size] for i in range(0, m, block_size)]


def block_kaczmarz_solve(A, b, cfg, x0=None, *, time_limit=None, keep_iterates=False):
    """Randomized block Kaczmarz for the equations ``A x = b``.

    The rows are split once per run into a random partition; every
    iteration picks one block uniformly and moves ``x`` by ``lam`` times the
    minimum-norm least-squares correction for that block. Residuals in the
    trace are those of the equations, ``||A x - b||_2`` and
    ``max |A x - b|``.
    """
    A = _as_matrix(A, "A")
    b = _as_vector(b, "b")
    m, n = A.shape
    if b.shape[0] != m:
        raise ValueError(f"b has length {b.shape[0]}, expected {m}")
    x = _start_point(n, x0)
    rng = np.random.default_rng(cfg.seed)
    cap = int(cfg.max_iterations)
    selected, violations = [], []
    rec = _Recorder(False, keep_iterates)
    halting = cfg.halting

    if not 1 <= cfg.block_size <= m:
        raise ValueError(f"need 1 <= block_size <= m, got {cfg.block_size}")
    size = int(cfg.block_size)

    t0 = time.perf_counter()
    # block j of the partition is perm[j * size:(j + 1) * size], sliced on demand
    perm = rng.permutation(m)
    n_blocks = -(-m // size)
    raw = A @ x - b
    norm0, max0 = rec.add(0, np.abs(raw), 0.0, x)
    reason = "threshold" if halting.reached(norm0, max0, norm0, max0) else None
    k = 0
    while reason is None:
        if k >= cap:
            reason = "iteration-cap"
            break
        j = int(rng.integers(n_blocks))
        rows = perm[j * size:(j + 1) * size]
        Ab, bb = A[rows], b[rows]
        r = bb - Ab @ x
        selected.append(j)
        violations.append(float(np.abs(r).max()))
        x += cfg.lam * np.linalg.lstsq(Ab, r, rcond=None)[0]
        k += 1
        if k % cfg.stride and k < cap:
            continue
        elapsed = time.perf_counter() - t0
        norm, mx = rec.add(k, np.abs(A @ x - b), elapsed, x)
        if halting.reached(norm, mx, norm0, max0):
            reason = "threshold"
        elif time_limit is not None and elapsed > time_limit:
            reason = "timeout"
    return rec.trace(x, reason, cfg.seed, np.asarray(selected, dtype=np.int64),
                     np.asarray(violations, dtype=float))


def warmup():
    """Compile the numba kernels so the first timed run does not pay for it."""
    p = FeasibilityProblem(np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros(2))
    skm_solve(p, SkmConfig(beta=1, max_iterations=2, halting=HaltingRule.iteration_cap()),
              np.ones(2))
    skm_solve(p, SkmConfig(beta=2, max_iterations=2, halting=HaltingRule.iteration_cap()),
              np.ones(2))
    _frozen(p.A, p.b, p.row_norms_sq, np.ones(2), 1.0)
