import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from svdalarm.errors import InvalidInputError, SingularMatrixError
from svdalarm.numerics import (
    largest_singular_value,
    largest_singular_values,
    spectral_norm,
    weighted_pinv,
)


def jacobi_eigenvalues(S, sweeps=100):
    """Cyclic Jacobi rotations on a symmetric matrix; independent of LAPACK SVD."""
    S = np.array(S, dtype=float)
    n = S.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(S, -1) ** 2))
        if off < 1e-15 * np.linalg.norm(S):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if S[p, q] == 0.0:
                    continue
                theta = (S[q, q] - S[p, p]) / (2 * S[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                S = J.T @ S @ J
    return np.diag(S)


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def mats(shape):
    return arrays(np.float64, shape, elements=finite)


def test_zero_matrix():
    assert largest_singular_value(np.zeros((3, 2))) == 0.0


def test_repeated_column():
    A = np.tile([[3.0], [4.0]], (1, 4))
    assert largest_singular_value(A) == pytest.approx(10.0, rel=1e-14)


def test_gaussian_against_jacobi_oracle():
    A = np.random.default_rng(7).standard_normal((10, 5))
    oracle = np.sqrt(jacobi_eigenvalues(A.T @ A).max())
    assert largest_singular_value(A) == pytest.approx(oracle, rel=1e-9)


def test_non_finite_rejected():
    with pytest.raises(InvalidInputError):
        largest_singular_value(np.array([[1.0, np.nan]]))
    with pytest.raises(InvalidInputError):
        largest_singular_value(np.array([[np.inf]]))


def test_batched_matches_single(rng):
    stack = rng.standard_normal((6, 8, 3))
    expected = [largest_singular_value(A) for A in stack]
    np.testing.assert_allclose(largest_singular_values(stack), expected, rtol=1e-12)


@pytest.mark.parametrize("A, expected", [(np.eye(3), 1.0), (np.diag([2.0, 5.0, 1.0]), 5.0)])
def test_spectral_norm(A, expected):
    assert spectral_norm(A) == pytest.approx(expected, rel=1e-14)


def test_spectral_norm_bundled(H39):
    value = spectral_norm(H39.H)
    assert value > 0
    assert value == largest_singular_value(H39.H)


def test_weighted_pinv_identity():
    np.testing.assert_allclose(weighted_pinv(np.eye(3), np.ones(3)), np.eye(3), atol=1e-15)


def test_weighted_pinv_average():
    K = weighted_pinv(np.array([[1.0], [1.0]]), np.ones(2))
    np.testing.assert_allclose(K, [[0.5, 0.5]], atol=1e-15)


def test_weighted_pinv_bundled(H39):
    K = weighted_pinv(H39.H, np.full(H39.M, 0.05**2))
    assert np.max(np.abs(K @ H39.H - np.eye(H39.N))) < 1e-9


def test_weighted_pinv_errors():
    with pytest.raises(SingularMatrixError):
        weighted_pinv(np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]), np.ones(3))
    with pytest.raises(InvalidInputError):
        weighted_pinv(np.eye(2), np.array([1.0, 0.0]))
    with pytest.raises(InvalidInputError):
        weighted_pinv(np.eye(2), np.ones(3))


@settings(max_examples=50, deadline=None)
@given(mats((6, 4)), mats((6, 4)))
def test_subadditive(A, B):
    assert largest_singular_value(A + B) <= largest_singular_value(A) + largest_singular_value(B) + 1e-9


@settings(max_examples=50, deadline=None)
@given(mats((5, 3)), mats((5, 3)), mats((5, 3)))
def test_reverse_triangle_lower_bound(A, B, C):
    lhs = largest_singular_value(A + B + C)
    assert lhs >= abs(largest_singular_value(A) - largest_singular_value(B + C)) - 1e-9


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 7, elements=finite), st.integers(1, 20))
def test_identical_columns(v, w):
    s1 = largest_singular_value(np.tile(v[:, None], (1, w)))
    assert abs(s1 - np.sqrt(w) * np.linalg.norm(v)) <= 1e-12 * max(1.0, s1)


@settings(max_examples=50, deadline=None)
@given(mats((4, 6)))
def test_below_frobenius(A):
    assert largest_singular_value(A) <= np.linalg.norm(A, "fro") * (1 + 1e-12) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_gain_left_inverse(seed):
    r = np.random.default_rng(seed)
    H = r.standard_normal((9, 4))
    K = weighted_pinv(H, r.uniform(0.1, 2.0, 9))
    assert np.max(np.abs(K @ H - np.eye(4))) < 1e-9
