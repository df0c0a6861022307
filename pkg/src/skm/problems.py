"""Test instances: random families, SVM systems, and LPs read from MPS files.

File formats
------------
Instance interchange (``*.skm``)::

    skm-problem v1 <m> <n>
    a_11 ... a_1n b_1
    ...

Vector files (witnesses)::

    skm-vector v1 <n>
    x_1
    ...

Values are written with :func:`repr`, so a float survives a round trip
exactly. Labeled CSV for SVM data has the label (+1 or -1) in the first
field and the features after it; a header line is detected by a
non-numeric first token and skipped.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import FeasibilityProblem, _as_matrix, _as_vector

PROBLEM_MAGIC = "skm-problem"
VECTOR_MAGIC = "skm-vector"
FORMAT_VERSION = "v1"


# --- random families ----------------------------------------------------------


def _rhs_with_slack(A, rng):
    x_star = rng.standard_normal(A.shape[1])
    b = A @ x_star + np.abs(rng.standard_normal(A.shape[0]))
    return b, x_star


def gen_gaussian(m, n, seed):
    """Gaussian ``A`` and a right-hand side with a known interior point.

    ``b = A x* + |e|`` with ``x*`` and ``e`` standard normal, so ``x*`` is
    feasible with slack ``|e_i|`` in every row. Returns ``(problem, x*)``.
    """
    if m < 1 or n < 1:
        raise ValueError("need m, n >= 1")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    b, x_star = _rhs_with_slack(A, rng)
    return FeasibilityProblem(A, b), x_star


def correlated_matrix(m, n, lo, hi, rng):
    """Rows with all entries in ``[lo, hi]`` or all in ``[-hi, -lo]``, each w.p. 1/2."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    signs = np.where(rng.random(m) < 0.5, 1.0, -1.0)
    return rng.uniform(lo, hi, size=(m, n)) * signs[:, None]


def gen_correlated(m, n, lo=0.9, hi=1.0, seed=0):
    """Highly correlated rows, right-hand side built as in :func:`gen_gaussian`."""
    if m < 1 or n < 1:
        raise ValueError("need m, n >= 1")
    rng = np.random.default_rng(seed)
    A = correlated_matrix(m, n, lo, hi, rng)
    b, x_star = _rhs_with_slack(A, rng)
    return FeasibilityProblem(A, b), x_star


def gen_gaussian_equalities(m, n, seed):
    """Consistent equations ``A x = b`` with Gaussian ``A``; returns ``(A, b, x*)``."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x_star = rng.standard_normal(n)
    return A, A @ x_star, x_star


def gen_correlated_equalities(m, n, lo=0.9, hi=1.0, seed=0):
    """Consistent equations with correlated rows; returns ``(A, b, x*)``."""
    rng = np.random.default_rng(seed)
    A = correlated_matrix(m, n, lo, hi, rng)
    x_star = rng.standard_normal(n)
    return A, A @ x_star, x_star


def stack_equalities(A, b, normalize=False):
    """Inequality form ``[A; -A] x <= [b; -b]`` of the equations ``A x = b``."""
    A = _as_matrix(A, "A")
    b = _as_vector(b, "b")
    if normalize:
        norms = np.linalg.norm(A, axis=1)
        A, b = A / norms[:, None], b / norms
    return FeasibilityProblem(np.vstack([A, -A]), np.concatenate([b, -b]),
                              normalized=normalize)


# --- SVM ------------------------------------------------------------------------


@dataclass
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.labels = np.asarray(self.labels, dtype=float).ravel()
        if self.points.shape[0] < 1 or self.points.shape[0] != self.labels.shape[0]:
            raise ValueError("need one label per point and at least one point")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be +1 or -1")


def svm_to_feasibility(data):
    """Homogeneous system whose solutions are separating hyperplanes.

    Row ``i`` is ``-y_i [z_i, 1]`` and ``b = 0``; a solution ``(w, w0)``
    with ``A x < 0`` satisfies ``y_i (w . z_i + w0) > 0`` for every point.
    """
    Z = np.hstack([data.points, np.ones((data.points.shape[0], 1))])
    return FeasibilityProblem(-data.labels[:, None] * Z, np.zeros(Z.shape[0]))


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_labeled_csv(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not _is_number(rows[0][0].strip()):
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no records")
    labels = [float(r[0]) for r in rows]
    points = [[float(v) for v in r[1:]] for r in rows]
    if len({len(p) for p in points}) != 1:
        raise ValueError(f"{path}: records have differing feature counts")
    return LabeledDataset(np.array(points), np.array(labels))


# --- MPS --------------------------------------------------------------------------


class MpsFormatError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class LpInstance:
    """``min c^T x  s.t.  A_eq x = b, l <= x <= u`` plus extra inequality rows.

    ``inequalities`` holds ``(coefficients, sense, rhs)`` triplets with
    sense ``"L"`` (``<=``) or ``"G"`` (``>=``). Infinite bounds are
    ``-inf``/``inf``.
    """

    A_eq: np.ndarray
    b: np.ndarray
    c: np.ndarray
    l: np.ndarray
    u: np.ndarray
    name: str = ""
    p_star: float | None = None
    inequalities: list = field(default_factory=list)
    row_names: list = field(default_factory=list)
    col_names: list = field(default_factory=list)
    objective_offset: float = 0.0

    def __post_init__(self):
        both = np.isfinite(self.l) & np.isfinite(self.u)
        if np.any(self.l[both] > self.u[both]):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self):
        return self.c.shape[0]


_SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"}
_UNSUPPORTED = {"RANGES", "OBJSENSE", "OBJSENS", "SOS", "QUADOBJ", "QMATRIX"}
_BOUND_TYPES = {"UP", "LO", "FX", "FR", "MI", "PL"}


def _num(token, lineno):
    try:
        return float(token)
    except ValueError:
        raise MpsFormatError(f"expected a number, got {token!r}", lineno) from None


def parse_mps(text):
    """Parse a subset of MPS into an :class:`LpInstance`.

    Section headers start in column one; data lines are indented and
    whitespace separated, which covers fixed-field files whose names have
    no blanks. Supported: NAME, ROWS (N/E/L/G), COLUMNS, RHS, BOUNDS
    (UP/LO/FX/FR/MI/PL), ENDATA. E rows go to ``A_eq``; L and G rows are
    kept as inequality triplets. Variables default to ``0 <= x < inf``.
    """
    name = ""
    section = None
    row_type = {}
    row_order = []
    objective = None
    cols = {}
    entries = {}
    rhs = {}
    lower, upper = {}, {}
    offset = 0.0
    ended = False
    seen = set()

    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.rstrip("\n\r")
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        if not line[0].isspace():
            tokens = line.split()
            head = tokens[0].upper()
            if head in _UNSUPPORTED:
                raise MpsFormatError(f"unsupported section {head}", lineno)
            if head not in _SECTIONS:
                raise MpsFormatError(f"unknown section {tokens[0]!r}", lineno)
            if ended:
                raise MpsFormatError("content after ENDATA", lineno)
            section = head
            seen.add(head)
            if head == "NAME":
                name = " ".join(tokens[1:])
            elif head == "ENDATA":
                ended = True
            elif len(tokens) > 1:
                raise MpsFormatError(f"unexpected tokens after {head}", lineno)
            continue

        tokens = line.split()
        if section in (None, "NAME", "ENDATA"):
            raise MpsFormatError("data line outside a section", lineno)
        if section == "ROWS":
            if len(tokens) != 2:
                raise MpsFormatError("ROWS lines need a type and a name", lineno)
            kind, row = tokens[0].upper(), tokens[1]
            if kind not in ("N", "E", "L", "G"):
                raise MpsFormatError(f"unknown row type {kind!r}", lineno)
            if row in row_type:
                raise MpsFormatError(f"duplicate row {row!r}", lineno)
            row_type[row] = kind
            if kind == "N":
                if objective is None:
                    objective = row
            else:
                row_order.append(row)
        elif section == "COLUMNS":
            if "'MARKER'" in tokens:
                raise MpsFormatError("integer markers are not supported", lineno)
            if len(tokens) not in (3, 5):
                raise MpsFormatError("COLUMNS lines need a column and 1 or 2 pairs", lineno)
            col = tokens[0]
            j = cols.setdefault(col, len(cols))
            for row, val in zip(tokens[1::2], tokens[2::2]):
                if row not in row_type:
                    raise MpsFormatError(f"unknown row {row!r}", lineno)
                if (row, j) in entries:
                    raise MpsFormatError(f"duplicate entry for column {col!r} in row {row!r}",
                                         lineno)
                entries[(row, j)] = _num(val, lineno)
        elif section == "RHS":
            pairs = tokens[1:] if len(tokens) % 2 else tokens
            if not pairs or len(pairs) > 4:
                raise MpsFormatError("RHS lines need 1 or 2 row/value pairs", lineno)
            for row, val in zip(pairs[::2], pairs[1::2]):
                if row not in row_type:
                    raise MpsFormatError(f"unknown row {row!r}", lineno)
                if row_type[row] == "N":
                    # objective constant enters with the opposite sign
                    offset = -_num(val, lineno)
                else:
                    rhs[row] = _num(val, lineno)
        elif section == "BOUNDS":
            kind = tokens[0].upper()
            if kind not in _BOUND_TYPES:
                raise MpsFormatError(f"unsupported bound type {kind!r}", lineno)
            need_value = kind in ("UP", "LO", "FX")
            if need_value:
                if len(tokens) not in (3, 4):
                    raise MpsFormatError(f"{kind} bound needs a column and a value", lineno)
                col, val = tokens[-2], _num(tokens[-1], lineno)
            else:
                if len(tokens) not in (2, 3):
                    raise MpsFormatError(f"{kind} bound needs a column", lineno)
                col, val = tokens[-1], None
            if col not in cols:
                raise MpsFormatError(f"bound on unknown column {col!r}", lineno)
            j = cols[col]
            if kind == "UP":
                upper[j] = val
                if val < 0 and lower.get(j, 0.0) == 0.0:
                    # MPS convention: a negative upper bound frees the default lower bound
                    lower[j] = -math.inf
            elif kind == "LO":
                lower[j] = val
            elif kind == "FX":
                lower[j] = upper[j] = val
            elif kind == "FR":
                lower[j], upper[j] = -math.inf, math.inf
            elif kind == "MI":
                lower[j] = -math.inf
            else:
                upper[j] = math.inf

    if not ended:
        raise MpsFormatError("missing ENDATA")
    for required in ("ROWS", "COLUMNS"):
        if required not in seen:
            raise MpsFormatError(f"missing {required} section")
    if not cols:
        raise MpsFormatError("COLUMNS section is empty")

    n = len(cols)
    c = np.zeros(n)
    dense = {row: np.zeros(n) for row in row_order}
    for (row, j), val in entries.items():
        if row == objective:
            c[j] = val
        elif row in dense:
            dense[row][j] = val
    eq_rows = [r for r in row_order if row_type[r] == "E"]
    A_eq = np.array([dense[r] for r in eq_rows]).reshape(len(eq_rows), n)
    b = np.array([rhs.get(r, 0.0) for r in eq_rows])
    ineq = [(dense[r], row_type[r], rhs.get(r, 0.0)) for r in row_order if row_type[r] != "E"]
    l = np.array([lower.get(j, 0.0) for j in range(n)])
    u = np.array([upper.get(j, math.inf) for j in range(n)])
    try:
        return LpInstance(A_eq, b, c, l, u, name=name, inequalities=ineq,
                          row_names=eq_rows, col_names=list(cols),
                          objective_offset=offset)
    except ValueError as exc:
        raise MpsFormatError(str(exc)) from None


def read_mps(path):
    """Parse an MPS file; a JSON sidecar (same stem, ``.json``) may supply ``p_star``."""
    path = Path(path)
    lp = parse_mps(path.read_text())
    meta = path.with_suffix(".json")
    if meta.exists():
        info = json.loads(meta.read_text())
        if info.get("p_star") is not None:
            lp.p_star = float(info["p_star"])
    return lp


def lp_to_feasibility(lp, p_star=None):
    """Feasibility system for the optimal face of ``lp``.

    Rows, top to bottom: ``A_eq``, ``-A_eq``, ``I`` for finite upper bounds,
    ``-I`` for finite lower bounds, ``c^T`` with right-hand side ``p*``, then
    the L rows as given and the G rows negated. Infinite bounds give no row.
    """
    if p_star is None:
        p_star = lp.p_star
    if p_star is None:
        raise ValueError("p_star is required (pass it or set lp.p_star)")
    n = lp.n
    eye = np.eye(n)
    fu = np.isfinite(lp.u)
    fl = np.isfinite(lp.l)
    blocks = [lp.A_eq, -lp.A_eq, eye[fu], -eye[fl], lp.c[None, :]]
    rhs = [lp.b, -lp.b, lp.u[fu], -lp.l[fl], [p_star - lp.objective_offset]]
    for coeffs, sense, value in lp.inequalities:
        sign = 1.0 if sense == "L" else -1.0
        blocks.append(sign * np.asarray(coeffs)[None, :])
        rhs.append([sign * value])
    A = np.vstack([np.asarray(blk, dtype=float).reshape(-1, n) for blk in blocks])
    b = np.concatenate([np.asarray(r, dtype=float).ravel() for r in rhs])
    return FeasibilityProblem(A, b)


def stacked_shape(lp):
    """``(rows, cols)`` of :func:`lp_to_feasibility` before zero rows are dropped."""
    rows = (2 * lp.A_eq.shape[0] + int(np.isfinite(lp.u).sum())
            + int(np.isfinite(lp.l).sum()) + len(lp.inequalities) + 1)
    return rows, lp.n


# --- instance files ---------------------------------------------------------------


def write_problem(path, A, b):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    with open(path, "w") as fh:
        fh.write(f"{PROBLEM_MAGIC} {FORMAT_VERSION} {m} {n}\n")
        for row, rhs in zip(A, b):
            fh.write(" ".join(repr(float(v)) for v in row) + " " + repr(float(rhs)) + "\n")


def read_instance(path):
    """Raw ``(A, b)`` from an instance file."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != PROBLEM_MAGIC:
            raise ValueError(f"{path}: not an {PROBLEM_MAGIC} file")
        if header[1] != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported version {header[1]}")
        m, n = int(header[2]), int(header[3])
        data = [line.split() for line in fh if line.strip()]
    if len(data) != m or any(len(r) != n + 1 for r in data):
        raise ValueError(f"{path}: expected {m} rows of {n + 1} values")
    values = np.array([[float(v) for v in r] for r in data]).reshape(m, n + 1)
    return values[:, :n], values[:, n]


def load_problem(path):
    return FeasibilityProblem(*read_instance(path))


def write_vector(path, x):
    x = np.asarray(x, dtype=float).ravel()
    with open(path, "w") as fh:
        fh.write(f"{VECTOR_MAGIC} {FORMAT_VERSION} {x.size}\n")
        fh.writelines(repr(float(v)) + "\n" for v in x)


def read_vector(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != VECTOR_MAGIC:
            raise ValueError(f"{path}: not an {VECTOR_MAGIC} file")
        values = [float(line) for line in fh if line.strip()]
    if len(values) != int(header[2]):
        raise ValueError(f"{path}: expected {header[2]} values")
    return np.array(values)

