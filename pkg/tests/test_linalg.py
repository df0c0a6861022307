import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from skm.linalg import (
    NORM_CACHE_RTOL,
    UNIT_NORM_TOL,
    FeasibilityProblem,
    InfeasibleRowError,
    euclidean_distance,
    normalize_system,
    positive_part,
    residual,
    residual_norm,
    smallest_singular_value,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def matrices(max_m=8, max_n=5):
    return st.tuples(st.integers(1, max_m), st.integers(1, max_n)).flatmap(
        lambda s: st.tuples(arrays(float, s, elements=finite), arrays(float, s[0], elements=finite))
    )


@pytest.mark.parametrize("v, out", [([-1, 0, 2], [0, 0, 2]), ([0, 0], [0, 0]), ([3.5], [3.5])])
def test_positive_part_examples(v, out):
    np.testing.assert_array_equal(positive_part(v), out)


@given(arrays(float, st.integers(1, 20), elements=finite))
def test_positive_part_idempotent(v):
    once = positive_part(v)
    np.testing.assert_array_equal(positive_part(once), once)


def test_positive_part_rejects_nan():
    with pytest.raises(ValueError):
        positive_part([1.0, np.nan])


def test_residual_examples():
    p = FeasibilityProblem(np.eye(2), [0, 0])
    np.testing.assert_array_equal(residual(p, [2, -3]), [2, 0])
    q = FeasibilityProblem([[1], [-1]], [1, 1])
    np.testing.assert_array_equal(residual(q, [5]), [4, 0])
    assert residual_norm(q, [5]) == 4.0
    np.testing.assert_array_equal(residual(q, [0.3]), [0, 0])


def test_residual_dimension_mismatch():
    p = FeasibilityProblem(np.eye(2), [0, 0])
    with pytest.raises(ValueError):
        residual(p, [1, 2, 3])


@settings(max_examples=60)
@given(matrices(), st.data())
def test_residual_zero_iff_rows_satisfied(Ab, data):
    A, b = Ab
    A[np.linalg.norm(A, axis=1) < 1e-6, 0] = 1.0
    p = FeasibilityProblem(A, b)
    x = data.draw(arrays(float, A.shape[1], elements=st.floats(-10, 10)))
    per_row = [float(A[i] @ x) <= b[i] for i in range(A.shape[0])]
    assert (not residual(p, x).any()) == all(per_row)


def test_row_norm_cache():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((30, 7))
    p = FeasibilityProblem(A, rng.standard_normal(30))
    ref = np.array([np.sqrt(sum(v * v for v in row)) for row in A])
    np.testing.assert_allclose(p.row_norms, ref, rtol=NORM_CACHE_RTOL)
    np.testing.assert_allclose(p.row_norms_sq, ref**2, rtol=2 * NORM_CACHE_RTOL)


def test_arrays_are_read_only():
    p = FeasibilityProblem(np.eye(2), [1, 1])
    with pytest.raises(ValueError):
        p.A[0, 0] = 5.0
    with pytest.raises(ValueError):
        p.b[0] = 5.0


def test_rejects_bad_shapes_and_values():
    with pytest.raises(ValueError):
        FeasibilityProblem(np.ones((2, 2)), [1, 2, 3])
    with pytest.raises(ValueError):
        FeasibilityProblem([[np.inf, 0]], [1])
    with pytest.raises(ValueError):
        FeasibilityProblem(np.ones(3), [1])


def test_zero_row_dropped_with_warning():
    with pytest.warns(UserWarning, match="dropped 1"):
        p = FeasibilityProblem([[1, 0], [0, 0], [0, 1]], [1, 2, 3])
    assert p.m == 2 and p.dropped_rows == 1
    np.testing.assert_array_equal(p.b, [1, 3])


def test_zero_row_infeasible_raises():
    with pytest.raises(InfeasibleRowError, match="trivially infeasible"):
        FeasibilityProblem([[1, 0], [0, 0]], [1, -1])


def test_normalize_example():
    q = normalize_system(FeasibilityProblem([[3, 4]], [10]))
    np.testing.assert_allclose(q.A, [[0.6, 0.8]])
    np.testing.assert_allclose(q.b, [2.0])
    assert q.normalized
    assert normalize_system(q) is q


def test_normalized_flag_checked():
    with pytest.raises(ValueError):
        FeasibilityProblem([[3, 4]], [10], normalized=True)
    p = FeasibilityProblem([[0.6, 0.8]], [1], normalized=True)
    assert abs(p.row_norms[0] - 1) <= UNIT_NORM_TOL


@settings(max_examples=60)
@given(matrices(), st.data())
def test_normalize_preserves_residual_signs(Ab, data):
    A, b = Ab
    A[np.linalg.norm(A, axis=1) < 1e-3, 0] = 1.0
    p = FeasibilityProblem(A, b)
    q = normalize_system(p)
    assert np.all(np.abs(q.row_norms - 1) <= UNIT_NORM_TOL)
    x = data.draw(arrays(float, A.shape[1], elements=st.floats(-10, 10)))
    raw_p = p.A @ x - p.b
    raw_q = q.A @ x - q.b
    # entries within rounding of zero have no reliable sign
    clear = np.abs(raw_p) > 1e-9 * (1 + np.abs(p.A) @ np.abs(x) + np.abs(p.b))
    np.testing.assert_array_equal(np.sign(raw_p[clear]), np.sign(raw_q[clear]))


def test_normalize_carries_dropped_count():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = FeasibilityProblem([[3, 4], [0, 0]], [1, 0])
    assert normalize_system(p).dropped_rows == 1


@pytest.mark.parametrize("x, y, d", [([1, 2], [1, 2], 0.0), ([0, 0], [3, 4], 5.0), ([1], [-1], 2.0)])
def test_euclidean_distance(x, y, d):
    assert euclidean_distance(x, y) == d


def test_euclidean_distance_mismatch():
    with pytest.raises(ValueError):
        euclidean_distance([1, 2], [1])


def test_smallest_singular_value_examples():
    assert smallest_singular_value(np.eye(3)) == pytest.approx(1.0)
    assert smallest_singular_value(np.diag([2.0, 0.5])) == pytest.approx(0.5)
    assert smallest_singular_value([[1.0, 1.0], [1.0, 1.0]]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        smallest_singular_value(np.ones((2, 3)))


def test_smallest_singular_value_against_eigen_oracle():
    A = np.random.default_rng(11).standard_normal((50, 10))
    oracle = np.sqrt(np.linalg.eigvalsh(A.T @ A)[0])
    assert smallest_singular_value(A) == pytest.approx(oracle, rel=1e-6)


def test_smallest_singular_value_lower_bounds_action():
    rng = np.random.default_rng(5)
    for _ in range(5):
        A = rng.standard_normal((12, 4))
        smin = smallest_singular_value(A)
        V = rng.standard_normal((100, 4))
        V /= np.linalg.norm(V, axis=1)[:, None]
        assert np.all(smin <= np.linalg.norm(V @ A.T, axis=1) + 1e-8)
