"""Pure numpy implementation of the skew-symmetric elimination kernels.

Every function here has a drop-in twin in the compiled ``_kernels`` module.
Inputs are assumed exactly skew-symmetric, float64 and C-contiguous; the
public wrappers in :mod:`fgs_tfim.pfaffian` take care of that.

Factorisations are of Parlett-Reid type, ``P A P^T = L T L^T`` with ``L``
unit lower triangular and ``T`` skew tridiagonal. ``t[k]`` holds ``T[k, k+1]``.
"""

import numpy as np

BACKEND = "python"


def pfaffian_value(A):
    """Pfaffian by Parlett-Reid tridiagonalisation with partial pivoting."""
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    result = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if kp != k + 1:
            A[[k + 1, kp], k:] = A[[kp, k + 1], k:]
            A[k:, [k + 1, kp]] = A[k:, [kp, k + 1]]
            result = -result
        piv = A[k, k + 1]
        if piv == 0.0:
            return 0.0
        result *= piv
        if k + 2 < n:
            tau = A[k, k + 2:] / piv
            col = A[k + 2:, k + 1].copy()
            A[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return float(result)


def _eliminate_column(A, L, j, n, growth_limit=np.inf):
    """One Parlett-Reid step on column ``j``.

    Returns False, leaving ``A`` untouched, when a multiplier would exceed
    ``growth_limit`` (or the pivot vanishes under a non-zero column).
    """
    piv = A[j + 1, j]
    col = A[j + 2:, j]
    if piv == 0.0:
        return not np.any(col != 0.0)
    ell = col / piv
    if ell.size and np.max(np.abs(ell)) > growth_limit:
        return False
    row = A[j + 1, j + 2:].copy()
    A[j + 2:, j + 2:] -= np.outer(ell, row) - np.outer(row, ell)
    A[j + 2:, j] = 0.0
    A[j, j + 2:] = 0.0
    L[j + 2:, j + 1] = ell
    return True


def _swap(A, L, perm, a, b, jcols):
    A[[a, b], :] = A[[b, a], :]
    A[:, [a, b]] = A[:, [b, a]]
    L[[a, b], :jcols] = L[[b, a], :jcols]
    perm[[a, b]] = perm[[b, a]]


def ltl_pivoted(A):
    """Full Parlett-Reid factorisation with partial pivoting.

    Returns ``(t, L, perm, sign)`` such that
    ``A[perm][:, perm] == L @ T @ L.T`` and ``sign = det(P)``.
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    L = np.eye(n)
    perm = np.arange(n)
    sign = 1.0
    for j in range(n - 2):
        kp = j + 1 + int(np.argmax(np.abs(A[j + 1:, j])))
        if kp != j + 1:
            _swap(A, L, perm, j + 1, kp, j + 1)
            sign = -sign
        _eliminate_column(A, L, j, n)
    t = np.array([A[k, k + 1] for k in range(n - 1)])
    return t, L, perm, sign


def ltl_nested(B, growth_limit):
    """Factorisation that keeps every leading ``2m x 2m`` block intact.

    Pivoting is limited to swapping the two members of the next index pair
    (odd columns only), so ``T[:2m, :2m]`` and ``L[:2m, :2m]`` factor the
    leading block of ``B`` for every ``m <= K``.

    Returns ``(t, L, perm, blocksign, K)``; ``blocksign[m-1]`` is the
    determinant of the permutation restricted to the leading ``2m`` block and
    ``K`` counts the leading blocks that were factored with all multipliers
    bounded by ``growth_limit``.
    """
    A = np.array(B, dtype=np.float64)
    n = A.shape[0]
    M = n // 2
    L = np.eye(n)
    perm = np.arange(n)
    blocksign = np.ones(M)
    K = M
    for j in range(n - 2):
        if j % 2 == 1 and abs(A[j + 2, j]) > abs(A[j + 1, j]):
            _swap(A, L, perm, j + 1, j + 2, j + 1)
            blocksign[(j + 1) // 2:] *= -1.0
        if not _eliminate_column(A, L, j, n, growth_limit):
            K = (j + 2) // 2
            break
    t = np.array([A[k, k + 1] for k in range(n - 1)])
    return t, L, perm, blocksign, K


def adjugate_weights(t, w):
    """Weighted sum of Pfaffian adjugates of the leading blocks of ``T``.

    ``T`` is the skew tridiagonal matrix with superdiagonal ``t`` and
    ``w[m-1]`` weighs its leading ``2m`` block. The result is the skew matrix
    ``sum_m w_m * Pf(T_m) * inv(T_m)`` (blocks embedded top-left), built
    without any division.
    """
    t = np.asarray(t, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    M = w.shape[0]
    n = 2 * M
    Z = np.zeros((n, n))
    # R[j] for odd j: sum over blocks that contain j of w_m * prod t_{j+1}, t_{j+3}, ...
    R = np.zeros(n)
    R[n - 1] = w[M - 1]
    for j in range(n - 3, -1, -2):
        R[j] = w[(j + 1) // 2 - 1] + t[j + 1] * R[j + 2]
    pre = 1.0
    for i in range(0, n, 2):
        mid = 1.0
        for j in range(i + 1, n, 2):
            v = pre * mid * R[j]
            Z[j, i] = v
            Z[i, j] = -v
            if j < n - 1:
                mid *= t[j]
        pre *= t[i]
    return Z
