"""Convergence rates, certificate quantities and the sample-size gain model.

All logarithms in the encoding length and the certificate iteration bound
are base 2.
"""

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linalg import _as_matrix, _check_point, smallest_singular_value

#: Singular values at or below this make a Hoffman constant unavailable.
RANK_TOL = 1e-10
#: Above this many rows the selection expectation uses log-space weights.
EXACT_WEIGHT_LIMIT = 60
#: Largest number of subsets the brute-force oracle will enumerate.
ENUMERATION_LIMIT = 10**6


class HoffmanUnavailableError(ValueError):
    pass


@dataclass(frozen=True)
class HoffmanEstimate:
    """Hoffman constants with ``L_inf_upper = sqrt(m) * L2``."""

    L2: float
    L_inf_upper: float
    method: str

    def __post_init__(self):
        if not self.L2 > 0:
            raise ValueError("L2 must be positive")


def _hoffman(L2, m, method):
    return HoffmanEstimate(float(L2), math.sqrt(m) * float(L2), method)


def hoffman_from_equalities(A_eq):
    """``L2 = 1 / sigma_min(A_eq)`` for a consistent full-column-rank system.

    This is the norm of the left inverse of ``A_eq``; it is also the
    constant of the stacked inequalities ``[A; -A] x <= [b; -b]``.
    """
    A_eq = _as_matrix(A_eq, "A_eq")
    m, n = A_eq.shape
    smin = smallest_singular_value(A_eq) if m >= n else 0.0
    if smin <= RANK_TOL:
        raise HoffmanUnavailableError("Hoffman constant unavailable: supply user value")
    return _hoffman(1.0 / smin, m, "LeftInverse")


def hoffman_user(L2, m):
    return _hoffman(L2, m, "UserSupplied")


def hoffman_enumerated(A, max_subsets=200_000):
    """Upper bound on ``L2`` for ``A x <= b``, valid for every feasible ``b``.

    Returns ``max 1 / sigma_min(A_J)`` over the row subsets ``J`` whose rows
    are linearly independent. At the projection ``y`` of ``x`` onto the
    polyhedron, ``x - y`` is a conic combination of such a subset of active
    normals, which gives ``d(x, P) <= ||(Ax - b)^+|| / sigma_min(A_J)``.
    Only practical for small systems; raises when more than
    ``max_subsets`` subsets would be examined.
    """
    A = _as_matrix(A, "A")
    m, n = A.shape
    kmax = min(m, n)
    total = sum(math.comb(m, k) for k in range(1, kmax + 1))
    if total > max_subsets:
        raise HoffmanUnavailableError(
            f"{total} row subsets exceed the enumeration limit; supply L2"
        )
    worst = 0.0
    for k in range(1, kmax + 1):
        idx = np.array(list(itertools.combinations(range(m), k)))
        sv = np.linalg.svd(A[idx], compute_uv=False)
        smin = sv[:, -1]
        indep = smin > RANK_TOL * np.maximum(sv[:, 0], 1.0)
        if indep.any():
            worst = max(worst, float(np.max(1.0 / smin[indep])))
    if worst == 0.0:
        raise HoffmanUnavailableError("A has no nonzero row")
    return _hoffman(worst, m, "Enumerated")


def _check_lambda(lam, allow_two=True):
    if not (0 < lam < 2 or (allow_two and lam == 2)):
        raise ValueError(f"lambda must lie in (0, 2{']' if allow_two else ')'}, got {lam!r}")


def _rate(lam, denom):
    rho = 1.0 - (2 * lam - lam * lam) / denom
    if rho < 0:
        warnings.warn(f"rate {rho} is negative; clamped to 0", stacklevel=3)
        rho = 0.0
    return rho


def theorem1_rate(lam, m, L2):
    """Guaranteed contraction ``1 - (2 lam - lam^2) / (m L2^2)`` of E d(x_k, P)^2."""
    _check_lambda(lam)
    if m < 1 or not L2 > 0:
        raise ValueError("need m >= 1 and L2 > 0")
    return _rate(lam, m * L2 * L2)


def motzkin_rate(lam, L2=None, m=None, L_inf=None):
    """Deterministic contraction of Motzkin's method on a normalized system.

    Uses ``1 - (2 lam - lam^2) / L_inf^2`` when ``L_inf`` is given and the
    weaker ``1 - (2 lam - lam^2) / (m L2^2)`` otherwise.
    """
    _check_lambda(lam)
    if L_inf is not None:
        return _rate(lam, L_inf * L_inf)
    if L2 is None or m is None:
        raise ValueError("give L_inf, or both L2 and m")
    return theorem1_rate(lam, m, L2)


def randomized_kaczmarz_rate(lam, frobenius_sq, L2):
    """Expected contraction ``1 - (2 lam - lam^2) / (||A||_F^2 L2^2)``."""
    _check_lambda(lam)
    return _rate(lam, frobenius_sq * L2 * L2)


def effective_rows(m, s, beta):
    """``V = max(m - s, m - beta + 1)`` for ``s`` satisfied constraints."""
    if not 0 <= s <= m or not 1 <= beta <= m:
        raise ValueError("need 0 <= s <= m and 1 <= beta <= m")
    return max(m - s, m - beta + 1)


def per_iteration_rate(lam, V, L2):
    """One-step contraction ``1 - (2 lam - lam^2) / (V L2^2)``."""
    _check_lambda(lam)
    if V < 1:
        raise ValueError("V must be at least 1")
    return _rate(lam, V * L2 * L2)


def two_phase_bound(k, K, lam, m, beta, L2, d0_sq, n=None):
    """Bound on E d(x_k, P)^2 when all but the face constraints hold after K.

    The first ``K`` iterations contract at the ``m``-row rate, the remaining
    ``k - K`` at the ``(m - beta + 1)``-row rate.
    """
    if k < K or K < 0:
        raise ValueError("need 0 <= K <= k")
    if n is not None and beta > m - n:
        warnings.warn("two-phase bound assumes beta <= m - n", stacklevel=2)
    slow = theorem1_rate(lam, m, L2)
    fast = per_iteration_rate(lam, m - beta + 1, L2)
    return slow**K * fast ** (k - K) * d0_sq


def _is_rational(v):
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def _residual_values(r, beta):
    vals = list(r)
    m = len(vals)
    if not 1 <= beta <= m:
        raise ValueError(f"need 1 <= beta <= m, got beta={beta}, m={m}")
    if any(v < 0 for v in vals):
        raise ValueError("residual entries must be nonnegative (pass the positive part)")
    return vals, m


def expected_selected_residual_sq(r, beta):
    """Expected squared largest entry of ``r`` over a random ``beta``-subset.

    With ``r`` sorted ascending, the entry in position ``beta + k`` is the
    sample maximum in ``C(beta - 1 + k, beta - 1)`` of the ``C(m, beta)``
    subsets. Integer or :class:`~fractions.Fraction` input gives an exact
    Fraction; float input uses exact binomial weights up to
    ``EXACT_WEIGHT_LIMIT`` rows and log-gamma weights beyond.
    """
    vals, m = _residual_values(r, beta)
    if all(_is_rational(v) for v in vals):
        s = sorted(vals)
        total = sum(
            math.comb(beta - 1 + k, beta - 1) * s[beta - 1 + k] ** 2
            for k in range(m - beta + 1)
        )
        return Fraction(total) / math.comb(m, beta)
    s = np.sort(np.asarray(vals, dtype=float))
    ks = np.arange(m - beta + 1)
    if m <= EXACT_WEIGHT_LIMIT:
        total = math.comb(m, beta)
        w = np.array([float(Fraction(math.comb(beta - 1 + k, beta - 1), total)) for k in ks])
    else:
        lg = np.vectorize(math.lgamma)
        logw = (lg(beta + ks) - math.lgamma(beta) - lg(ks + 1)
                - (math.lgamma(m + 1) - math.lgamma(beta + 1) - math.lgamma(m - beta + 1)))
        w = np.exp(logw)
    tail = s[beta - 1:]
    return float(np.dot(w, tail * tail))


def brute_force_expected_max_sq(r, beta, limit=ENUMERATION_LIMIT):
    """Average of ``max(r_S)^2`` over every ``beta``-subset ``S``, by enumeration."""
    vals, m = _residual_values(r, beta)
    count = math.comb(m, beta)
    if count > limit:
        raise ValueError(f"C({m}, {beta}) = {count} subsets exceeds the limit {limit}")
    maxima = (max(c) ** 2 for c in itertools.combinations(vals, beta))
    if all(_is_rational(v) for v in vals):
        return Fraction(sum(maxima)) / count
    return math.fsum(float(v) for v in maxima) / count


# --- certificates of feasibility -------------------------------------------


@dataclass(frozen=True)
class EncodingLength:
    sigma: float
    max_row_norm: float

    def __post_init__(self):
        if self.sigma < 2:
            raise ValueError("sigma is at least 2")


def _integer_entries(values, name):
    out = []
    for v in values:
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            out.append(int(v))
            continue
        if isinstance(v, Fraction) and v.denominator == 1:
            out.append(int(v))
            continue
        f = float(v)
        if not math.isfinite(f) or not f.is_integer():
            raise ValueError(f"{name} has non-integer entry {v!r}")
        out.append(int(f))
    return out


def encoding_length(A_int, b_int):
    """Binary encoding length of an integer system and its largest row norm.

    ``sigma = sum log2(|a_ij| + 1) + sum log2(|b_i| + 1) + log2(n m) + 2``.
    """
    rows = [list(r) for r in A_int]
    m = len(rows)
    if m == 0 or len(rows[0]) == 0:
        raise ValueError("empty system")
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise ValueError("ragged matrix")
    rows = [_integer_entries(r, "A") for r in rows]
    b = _integer_entries(list(b_int), "b")
    if len(b) != m:
        raise ValueError(f"b has length {len(b)}, expected {m}")
    sigma = (
        math.fsum(math.log2(abs(a) + 1) for r in rows for a in r)
        + math.fsum(math.log2(abs(v) + 1) for v in b)
        + math.log2(n * m)
        + 2
    )
    max_norm = max(math.sqrt(sum(a * a for a in r)) for r in rows)
    return EncodingLength(sigma, max_norm)


def clear_denominators(A, b):
    """Scale each row of ``A x <= b`` by a positive integer to make it integral.

    Entries may be ints, Fractions, or decimal strings. Returns lists of
    Python ints; the solution set is unchanged.
    """
    A_int, b_int = [], []
    for row, rhs in zip(A, b, strict=True):
        vals = [Fraction(v) for v in list(row) + [rhs]]
        scale = math.lcm(*(v.denominator for v in vals))
        ints = [int(v * scale) for v in vals]
        A_int.append(ints[:-1])
        b_int.append(ints[-1])
    return A_int, b_int


def max_violation(p, x):
    """``theta(x) = max(0, max_i a_i^T x - b_i)``."""
    x = _check_point(p, x)
    return max(0.0, float(np.max(p.A @ x - p.b)))


def certificate_threshold(enc):
    """Certificate level ``2^(1 - sigma) / max_j ||a_j||`` for the normalized system."""
    return 2.0 ** (1.0 - enc.sigma) / enc.max_row_norm


def iteration_bound_value(enc, n, m, lam, L2):
    """Real-valued right-hand side of the certificate iteration bound."""
    _check_lambda(lam, allow_two=False)
    if not L2 > 0:
        raise ValueError("L2 must be positive")
    num = 4 * enc.sigma - 4 - math.log2(n) + 2 * math.log2(enc.max_row_norm)
    mL = m * L2 * L2
    rest = mL - 2 * lam + lam * lam
    if rest <= 0:
        # rate is zero: one step reaches the polyhedron
        return 0.0
    den = math.log2(mL / rest)
    return num / den


def iteration_bound(enc, n, m, lam, L2):
    """Smallest iteration count (at least 1) strictly above the bound."""
    if lam == 2:
        raise ValueError("no finite bound at lambda = 2")
    value = iteration_bound_value(enc, n, m, lam, L2)
    if value < 1:
        return 1
    return math.floor(value) + 1


def failure_probability_bound(enc, n, m, lam, L2, k):
    """Bound on P(x_k is no certificate) for a feasible system.

    ``max ||a_j|| 2^(2 sigma - 2) / sqrt(n) * rho^(k/2)`` with ``rho`` the
    Theorem-1 rate. Evaluated in log space; may exceed 1 (vacuous) or be
    ``inf`` when the prefactor overflows.
    """
    rho = theorem1_rate(lam, m, L2)
    if rho == 0.0:
        return 0.0 if k > 0 else _pow2(_log_prefactor(enc, n))
    return _pow2(_log_prefactor(enc, n) + 0.5 * k * math.log2(rho))


def _log_prefactor(enc, n):
    return math.log2(enc.max_row_norm) + 2 * enc.sigma - 2 - 0.5 * math.log2(n)


def _pow2(e):
    try:
        return 2.0**e
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class CertificateReport:
    theta: float
    threshold: float
    is_certificate: bool
    iteration_bound: int | None = None
    failure_probability_bound: float | None = None


def certificate_check(p_normalized, x, enc, *, lam=None, L2=None, iterations=None):
    """Decide whether ``x`` certifies feasibility of the original system.

    ``p_normalized`` must be the row-normalized system and ``enc`` the
    encoding length of the original integer data. When ``lam`` and ``L2``
    are given the report also carries the iteration bound and the failure
    probability bound after ``iterations`` steps (default: the bound).
    """
    if not p_normalized.normalized:
        raise ValueError("certificate_check needs a normalized system")
    theta = max_violation(p_normalized, x)
    threshold = certificate_threshold(enc)
    bound = fail = None
    if lam is not None and L2 is not None:
        m, n = p_normalized.m, p_normalized.n
        bound = iteration_bound(enc, n, m, lam, L2)
        k = bound if iterations is None else iterations
        fail = failure_probability_bound(enc, n, m, lam, L2, k)
    return CertificateReport(theta, threshold, theta < threshold, bound, fail)


# --- gain model ---------------------------------------------------------------


@dataclass(frozen=True)
class GainModel:
    """Worst-case progress per unit cost with ``s`` of ``m`` rows satisfied.

    One iteration costs ``C + c n beta``.
    """

    m: int
    n: int
    s: int
    c: float = 1.0
    C: float = 0.0

    def __post_init__(self):
        if not 0 <= self.s <= self.m:
            raise ValueError("need 0 <= s <= m")
        if not self.c > 0 or self.C < 0:
            raise ValueError("need c > 0 and C >= 0")


def gain(model, beta, exact=False):
    """Expected improvement over cost for sample size ``beta``.

    ``exact=True`` uses the hit probability ``1 - C(s, beta) / C(m, beta)``
    instead of its approximation ``1 - (s/m)^beta``.
    """
    if not 1 <= beta <= model.m:
        raise ValueError(f"need 1 <= beta <= m, got {beta}")
    cost = model.C + model.c * model.n * beta
    if beta > model.s:
        return 1.0 / cost
    if exact:
        hit = 1.0 - math.comb(model.s, beta) / math.comb(model.m, beta)
    else:
        hit = 1.0 - (model.s / model.m) ** beta
    return hit / cost


def gain_curve(model, exact=False):
    return np.array([gain(model, beta, exact) for beta in range(1, model.m + 1)])


def optimal_beta(model, exact=False):
    """Sample size maximizing :func:`gain`; the smallest one on ties."""
    return int(np.argmax(gain_curve(model, exact))) + 1
