"""Small dense linear algebra for Jacobians of low-dimensional maps.

Every routine accepts a single ``(n, n)`` matrix or a stack ``(..., n, n)``
and works on the whole stack at once; orbit computations push tens of
thousands of 2x2 or 3x3 products through here per step.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatchError, InvalidInputError

MAX_DIM = 8

# one-sided Jacobi: a column pair counts as orthogonal once
# |<a_i, a_j>| <= JACOBI_TOL * |a_i| |a_j|
JACOBI_TOL = 1e-15
MAX_SWEEPS = 60


class LogDet(NamedTuple):
    """Determinant as ``sign * exp(log_magnitude)``; sign 0 pairs with -inf."""

    sign: np.ndarray | float
    log_magnitude: np.ndarray | float


def as_matrix(a) -> np.ndarray:
    """Validate and convert to a float64 array of shape ``(..., n, n)``."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise InvalidInputError(f"expected square matrices, got shape {arr.shape}")
    n = arr.shape[-1]
    if not 1 <= n <= MAX_DIM:
        raise InvalidInputError(f"matrix dimension {n} outside supported range 1..{MAX_DIM}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("matrix has non-finite entries")
    return arr


def _jacobi_columns(a: np.ndarray) -> np.ndarray:
    """Orthogonalise the columns of each matrix in a (B, n, n) stack in place."""
    n = a.shape[-1]
    if n == 1:
        return a
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(MAX_SWEEPS):
            rotated = False
            for i in range(n - 1):
                for j in range(i + 1, n):
                    ci = a[:, :, i]
                    cj = a[:, :, j]
                    alpha = np.einsum("bk,bk->b", ci, ci)
                    beta = np.einsum("bk,bk->b", cj, cj)
                    gamma = np.einsum("bk,bk->b", ci, cj)
                    active = np.abs(gamma) > JACOBI_TOL * np.sqrt(alpha * beta)
                    if not active.any():
                        continue
                    rotated = True
                    zeta = (beta[active] - alpha[active]) / (2.0 * gamma[active])
                    t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
                    c = 1.0 / np.sqrt(1.0 + t * t)
                    s = c * t
                    xi = ci[active]
                    xj = cj[active]
                    a[active, :, i] = c[:, None] * xi - s[:, None] * xj
                    a[active, :, j] = s[:, None] * xi + c[:, None] * xj
            if not rotated:
                break
    return a


def singular_values(a) -> np.ndarray:
    """Singular values in non-increasing order, shape ``(..., n)``.

    Computed by cyclic one-sided Jacobi rotations applied to the columns of
    ``a`` directly; ``a.T @ a`` is never formed, so small singular values keep
    their relative accuracy.
    """
    arr = as_matrix(a)
    batch = arr.shape[:-2]
    n = arr.shape[-1]
    work = _jacobi_columns(arr.reshape(-1, n, n).copy())
    sv = np.sqrt(np.einsum("bkj,bkj->bj", work, work))
    sv = -np.sort(-sv, axis=-1)
    return sv.reshape(*batch, n)


def operator_norm(a):
    """Largest singular value: sup of |Av| over unit vectors v."""
    s1 = singular_values(a)[..., 0]
    return float(s1) if s1.ndim == 0 else s1


def log_abs_det(a) -> LogDet:
    """Sign and natural-log magnitude of det(a) via partial-pivot elimination."""
    arr = as_matrix(a)
    batch = arr.shape[:-2]
    n = arr.shape[-1]
    u = arr.reshape(-1, n, n).copy()
    count = u.shape[0]
    rows = np.arange(count)
    sign = np.ones(count)
    logmag = np.zeros(count)
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(n):
            p = k + np.argmax(np.abs(u[:, k:, k]), axis=1)
            swap = p != k
            if swap.any():
                top = u[rows[swap], k, :].copy()
                u[rows[swap], k, :] = u[rows[swap], p[swap], :]
                u[rows[swap], p[swap], :] = top
                sign[swap] = -sign[swap]
            piv = u[:, k, k]
            sign *= np.sign(piv)
            logmag += np.log(np.abs(piv))
            if k + 1 < n:
                safe = np.where(piv != 0, piv, 1.0)
                factor = np.where((piv != 0)[:, None], u[:, k + 1:, k] / safe[:, None], 0.0)
                u[:, k + 1:, k:] -= factor[:, :, None] * u[:, None, k, k:]
    logmag = np.where(sign == 0, -np.inf, logmag)
    if not batch:
        return LogDet(float(sign[0]), float(logmag[0]))
    return LogDet(sign.reshape(batch), logmag.reshape(batch))


def matmul(a, b) -> np.ndarray:
    """Matrix product of equal-dimension matrices (broadcast over stacks)."""
    left = as_matrix(a)
    right = as_matrix(b)
    if left.shape[-1] != right.shape[-1]:
        raise DimensionMismatchError(
            f"cannot multiply {left.shape[-1]}x{left.shape[-1]} by {right.shape[-1]}x{right.shape[-1]}"
        )
    return np.matmul(left, right)
