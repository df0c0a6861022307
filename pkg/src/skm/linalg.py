"""Dense primitives and the inequality-system container shared by the package."""

import warnings

import numpy as np

#: Rows with Euclidean norm below this are treated as zero rows.
ZERO_ROW_TOL = 1e-14
#: Relative accuracy guaranteed for the cached row norms.
NORM_CACHE_RTOL = 1e-12
#: Allowed deviation from unit norm for a normalized system.
UNIT_NORM_TOL = 1e-10


class InfeasibleRowError(ValueError):
    """A zero row with negative right-hand side (0 <= b < 0) was supplied."""


def _as_vector(v, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def _as_matrix(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class FeasibilityProblem:
    """The inequality system ``A x <= b``.

    Row norms are cached on construction. Zero rows are removed: a zero row
    with ``b_i >= 0`` is always satisfied and is dropped with a warning, one
    with ``b_i < 0`` can never be satisfied and raises
    :class:`InfeasibleRowError`. The arrays are read-only; build a new
    problem instead of mutating one.

    Parameters
    ----------
    A : array_like, shape (m, n)
    b : array_like, shape (m,)
    normalized : bool
        Declare that every row has unit norm. Checked to ``UNIT_NORM_TOL``.
    """

    def __init__(self, A, b, normalized=False):
        A = _as_matrix(A, "A")
        b = _as_vector(b, "b")
        if b.shape[0] != A.shape[0]:
            raise ValueError(f"b has length {b.shape[0]}, expected {A.shape[0]}")
        norms = np.sqrt(np.einsum("ij,ij->i", A, A))
        zero = norms < ZERO_ROW_TOL
        self.dropped_rows = 0
        if zero.any():
            bad = np.flatnonzero(zero & (b < 0))
            if bad.size:
                raise InfeasibleRowError(
                    f"trivially infeasible row {int(bad[0])}: 0 <= {b[bad[0]]!r}"
                )
            self.dropped_rows = int(zero.sum())
            warnings.warn(f"dropped {self.dropped_rows} zero row(s)", stacklevel=2)
            keep = ~zero
            A, b, norms = A[keep], b[keep], norms[keep]
            if A.shape[0] == 0:
                raise ValueError("every row of A is zero")
        if normalized and np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise ValueError("rows are not unit norm but normalized=True")
        self._A = _frozen(A)
        self._b = _frozen(b)
        self._norms = _frozen(norms)
        self._norms_sq = _frozen(norms * norms)
        self._normalized = bool(normalized)

    @property
    def A(self):
        return self._A

    @property
    def b(self):
        return self._b

    @property
    def row_norms(self):
        return self._norms

    @property
    def row_norms_sq(self):
        return self._norms_sq

    @property
    def normalized(self):
        return self._normalized

    @property
    def m(self):
        return self._A.shape[0]

    @property
    def n(self):
        return self._A.shape[1]

    @property
    def shape(self):
        return self._A.shape

    def __repr__(self):
        flag = ", normalized" if self._normalized else ""
        return f"FeasibilityProblem(m={self.m}, n={self.n}{flag})"


def positive_part(v):
    """Entrywise ``max(v, 0)``."""
    return np.maximum(_as_vector(v), 0.0)


def _check_point(p, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({p.n},)")
    return x


def residual(p, x):
    """Positive residual ``(A x - b)^+`` of length m."""
    x = _check_point(p, x)
    return np.maximum(p.A @ x - p.b, 0.0)


def residual_norm(p, x):
    return float(np.linalg.norm(residual(p, x)))


def normalize_system(p):
    """Return the equivalent system with unit-norm rows.

    Each row and its right-hand side are divided by the row norm, which
    leaves the solution set unchanged. Zero rows were already handled when
    ``p`` was built; the count of dropped rows is carried over.
    """
    if p.normalized:
        return p
    q = FeasibilityProblem(
        p.A / p.row_norms[:, None], p.b / p.row_norms, normalized=True
    )
    q.dropped_rows = p.dropped_rows
    return q


def euclidean_distance(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.linalg.norm(x - y))


def smallest_singular_value(A):
    """Smallest singular value of a tall matrix (0 when rank deficient)."""
    A = _as_matrix(A, "A")
    if A.shape[0] < A.shape[1]:
        raise ValueError("expected m >= n")
    return float(np.linalg.svd(A, compute_uv=False)[-1])
