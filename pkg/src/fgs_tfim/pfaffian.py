"""Pfaffians, Pfaffian gradients and principal submatrices of real skew matrices.

The heavy lifting is done by the compiled ``_kernels`` extension when it is
importable, otherwise by the numpy twin ``_kernels_py``. Set the environment
variable ``FGS_TFIM_BACKEND=python`` to force the fallback.

Derivatives use the independent-entry convention: ``A[i, j]`` and ``A[j, i]``
are separate variables and a matrix that is not exactly skew is read through
its skew part ``(A - A.T) / 2``. Under this convention

    dPf(A)/dA[i, j] = (-1)**(i+j+1) / 2 * Pf(A without rows/cols i, j)
                    = Pf(A) * inv(A)[j, i] / 2.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg.lapack import dtrtri

if os.environ.get("FGS_TFIM_BACKEND", "").lower() == "python":
    from . import _kernels_py as _kern
else:
    try:
        from . import _kernels as _kern
    except ImportError:  # pragma: no cover - depends on the build
        from . import _kernels_py as _kern

BACKEND = _kern.BACKEND

#: multiplier bound for the pivot-restricted nested factorisation
NESTED_GROWTH_LIMIT = 1e3


def _as_skew(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] % 2:
        raise ValueError(f"Pfaffian needs an even dimension, got {A.shape[0]}")
    return np.ascontiguousarray(0.5 * (A - A.T))


def pfaffian(A) -> float:
    """Pfaffian of a real skew-symmetric matrix (``Pf`` of the empty matrix is 1)."""
    A = _as_skew(A)
    return _kern.pfaffian_value(A)


def _adjugate_from_factor(t, L, perm, weights):
    """``P^T L^{-T} Z L^{-1} P`` for the weighted adjugate sum ``Z``."""
    n = 2 * len(weights)
    Z = _kern.adjugate_weights(t[: n - 1], weights)
    # multipliers are bounded by pivoting (or the nested growth limit), so the
    # explicit unit-triangular inverse is safe in place of two triangular solves
    Linv, info = dtrtri(L[:n, :n], lower=1, unitdiag=1)
    if info:
        raise np.linalg.LinAlgError(f"dtrtri failed with info={info}")
    X = Linv.T @ Z @ Linv
    out = np.empty_like(X)
    p = perm[:n]
    out[p[:, None], p] = X
    return out


def pfaffian_adjugate(A) -> np.ndarray:
    """``Pf(A) * inv(A)`` computed without inverting, so singular ``A`` is fine."""
    A = _as_skew(A)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    t, L, perm, sign = _kern.ltl_pivoted(A)
    w = np.zeros(n // 2)
    w[-1] = sign
    return _adjugate_from_factor(t, L, perm, w)


def pfaffian_gradient(A) -> np.ndarray:
    """Matrix of partial derivatives ``dPf(A)/dA[i, j]`` (independent entries).

    Cost is a single O(n^3) factorisation; no minors are formed.
    """
    A = _as_skew(A)
    if A.shape[0] == 0:
        raise ValueError("gradient of the empty Pfaffian is undefined")
    return -0.5 * pfaffian_adjugate(A)


def principal_submatrix(A, indices) -> np.ndarray:
    """Rows and columns ``indices`` (0-based, strictly increasing) of ``A``."""
    A = np.asarray(A)
    idx = np.asarray(indices, dtype=np.intp).reshape(-1)
    n = A.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError(f"indices out of range for dimension {n}")
    if np.any(np.diff(idx) <= 0):
        raise ValueError("indices must be strictly increasing (no duplicates)")
    return A[np.ix_(idx, idx)]


def nested_pfaffians(B, weights=None, gradient=False, growth_limit=NESTED_GROWTH_LIMIT):
    """Pfaffians of all leading even blocks ``B[:2m, :2m]``, m = 1..M.

    With ``gradient=True`` also returns the gradient (independent-entry
    convention) of ``sum_m weights[m-1] * Pf(B[:2m, :2m])`` with respect to
    ``B``. One nested factorisation serves every block; blocks past a
    pivot breakdown are redone one by one with full pivoting.
    """
    B = np.ascontiguousarray(B, dtype=np.float64)
    n = B.shape[0]
    M = n // 2
    if weights is None:
        weights = np.ones(M)
    weights = np.asarray(weights, dtype=np.float64)
    t, L, perm, blocksign, K = _kern.ltl_nested(B[: 2 * M, : 2 * M], growth_limit)
    pfs = np.empty(M)
    pfs[:K] = blocksign[:K] * np.cumprod(t[0 : 2 * K - 1 : 2])
    grad = np.zeros((n, n)) if gradient else None
    if gradient and K:
        adj = _adjugate_from_factor(t, L, perm, weights[:K] * blocksign[:K])
        grad[: 2 * K, : 2 * K] -= 0.5 * adj
    for m in range(K + 1, M + 1):
        sub = B[: 2 * m, : 2 * m]
        if not gradient or weights[m - 1] == 0.0:
            pfs[m - 1] = _kern.pfaffian_value(sub)
            continue
        tm, Lm, pm, sign = _kern.ltl_pivoted(sub)
        pfs[m - 1] = sign * np.prod(tm[::2])
        w = np.zeros(m)
        w[-1] = sign * weights[m - 1]
        grad[: 2 * m, : 2 * m] -= 0.5 * _adjugate_from_factor(tm, Lm, pm, w)
    return pfs, grad
