"""Dense-matrix primitives: largest singular value, spectral norm, WLS gain."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, SingularMatrixError

__all__ = [
    "as_matrix",
    "as_vector",
    "largest_singular_value",
    "largest_singular_values",
    "spectral_norm",
    "weighted_pinv",
]

# reciprocal condition number below which H^T L^-1 H is treated as singular
_RCOND = 1e-12


def as_matrix(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def as_vector(v, name: str = "v") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise InvalidInputError(f"{name} must be a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return v


def largest_singular_value(A) -> float:
    """Return sigma_1(A), the largest singular value of a dense matrix.

    Uses LAPACK's divide-and-conquer SVD, which is accurate to a few ulps
    relative to sigma_1 for the matrix sizes handled here.
    """
    A = as_matrix(A)
    return float(np.linalg.svd(A, compute_uv=False)[0])


def largest_singular_values(stack) -> np.ndarray:
    """Vectorised sigma_1 over a stack of matrices shaped (k, rows, cols)."""
    stack = np.asarray(stack, dtype=float)
    if stack.ndim != 3:
        raise InvalidInputError(f"expected a (k, rows, cols) stack, got shape {stack.shape}")
    if stack.shape[0] == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(stack)):
        raise InvalidInputError("stack has non-finite entries")
    return np.linalg.svd(stack, compute_uv=False)[:, 0]


def spectral_norm(A) -> float:
    """Operator 2-norm; identical to :func:`largest_singular_value`."""
    return largest_singular_value(A)


def weighted_pinv(H, variances) -> np.ndarray:
    """WLS gain ``K = (H^T L^-1 H)^-1 H^T L^-1`` for diagonal covariance ``L``.

    Parameters
    ----------
    H : (M, N) array
        Measurement matrix with full column rank.
    variances : (M,) array
        Diagonal of the noise covariance; every entry must be positive.

    Returns
    -------
    K : (N, M) array with ``K @ H == I_N``.
    """
    H = as_matrix(H, "H")
    lam = as_vector(variances, "variances")
    if lam.shape[0] != H.shape[0]:
        raise InvalidInputError(
            f"variance vector has length {lam.shape[0]}, H has {H.shape[0]} rows"
        )
    if np.any(lam <= 0):
        raise InvalidInputError("variances must be strictly positive")

    HtW = H.T / lam  # H^T L^-1
    gram = HtW @ H
    s = np.linalg.svd(gram, compute_uv=False)
    if s[-1] <= _RCOND * s[0]:
        raise SingularMatrixError("H^T L^-1 H is singular; H lacks full column rank")
    return np.linalg.solve(gram, HtW)
