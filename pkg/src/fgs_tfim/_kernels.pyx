# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled skew-symmetric elimination kernels.

Mirrors ``_kernels_py`` function for function; see there for the contracts.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

BACKEND = "cython"


cdef inline void _swap_idx(double[:, ::1] A, double[:, ::1] L, Py_ssize_t[::1] perm,
                           Py_ssize_t a, Py_ssize_t b, Py_ssize_t jcols) noexcept nogil:
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t k
    cdef double tmp
    for k in range(n):
        tmp = A[a, k]
        A[a, k] = A[b, k]
        A[b, k] = tmp
    for k in range(n):
        tmp = A[k, a]
        A[k, a] = A[k, b]
        A[k, b] = tmp
    for k in range(jcols):
        tmp = L[a, k]
        L[a, k] = L[b, k]
        L[b, k] = tmp
    perm[a], perm[b] = perm[b], perm[a]


cdef int _eliminate(double[:, ::1] A, double[:, ::1] L, double[::1] ell,
                    Py_ssize_t j, double growth_limit) noexcept nogil:
    """Parlett-Reid step on column j. Returns 0 when refused (A untouched)."""
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t a, b
    cdef double piv = A[j + 1, j]
    cdef double la, ra, big = 0.0
    if piv == 0.0:
        for a in range(j + 2, n):
            if A[a, j] != 0.0:
                return 0
        return 1
    for a in range(j + 2, n):
        ell[a] = A[a, j] / piv
        if fabs(ell[a]) > big:
            big = fabs(ell[a])
    if big > growth_limit:
        return 0
    # row j+1 is left untouched by this step, so it can be read in place
    for a in range(j + 2, n):
        la = ell[a]
        ra = A[j + 1, a]
        for b in range(j + 2, n):
            A[a, b] -= la * A[j + 1, b] - ra * ell[b]
        A[a, j] = 0.0
        A[j, a] = 0.0
        L[a, j + 1] = la
    return 1


def pfaffian_value(A_in):
    """Pfaffian by Parlett-Reid tridiagonalisation with partial pivoting."""
    cdef double[:, ::1] A = np.array(A_in, dtype=np.float64, order="C")
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t k, kp, a, b
    cdef double result = 1.0, piv, best, tmp, ta
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    with nogil:
        k = 0
        while k < n - 1:
            kp = k + 1
            best = fabs(A[k + 1, k])
            for a in range(k + 2, n):
                if fabs(A[a, k]) > best:
                    best = fabs(A[a, k])
                    kp = a
            if kp != k + 1:
                for a in range(k, n):
                    tmp = A[k + 1, a]
                    A[k + 1, a] = A[kp, a]
                    A[kp, a] = tmp
                for a in range(k, n):
                    tmp = A[a, k + 1]
                    A[a, k + 1] = A[a, kp]
                    A[a, kp] = tmp
                result = -result
            piv = A[k, k + 1]
            if piv == 0.0:
                result = 0.0
                break
            result *= piv
            # Schur complement of the 2x2 pivot block
            for a in range(k + 2, n):
                ta = A[k, a] / piv
                for b in range(k + 2, n):
                    A[a, b] += ta * A[b, k + 1] - A[a, k + 1] * A[k, b] / piv
            k += 2
    return float(result)


def ltl_pivoted(A_in):
    """Full Parlett-Reid factorisation with partial pivoting."""
    cdef double[:, ::1] A = np.array(A_in, dtype=np.float64, order="C")
    cdef Py_ssize_t n = A.shape[0]
    L_arr = np.eye(n)
    perm_arr = np.arange(n, dtype=np.intp)
    ell_arr = np.zeros(n)
    cdef double[:, ::1] L = L_arr
    cdef Py_ssize_t[::1] perm = perm_arr
    cdef double[::1] ell = ell_arr
    cdef Py_ssize_t j, kp, a
    cdef double sign = 1.0, best
    with nogil:
        for j in range(n - 2):
            kp = j + 1
            best = fabs(A[j + 1, j])
            for a in range(j + 2, n):
                if fabs(A[a, j]) > best:
                    best = fabs(A[a, j])
                    kp = a
            if kp != j + 1:
                _swap_idx(A, L, perm, j + 1, kp, j + 1)
                sign = -sign
            _eliminate(A, L, ell, j, 1e308)
    t = np.array([A[k, k + 1] for k in range(n - 1)], dtype=np.float64)
    return t, L_arr, perm_arr, sign


def ltl_nested(B_in, double growth_limit):
    """Factorisation preserving every leading 2m x 2m block."""
    cdef double[:, ::1] A = np.array(B_in, dtype=np.float64, order="C")
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t M = n // 2
    L_arr = np.eye(n)
    perm_arr = np.arange(n, dtype=np.intp)
    ell_arr = np.zeros(n)
    bs_arr = np.ones(M)
    cdef double[:, ::1] L = L_arr
    cdef Py_ssize_t[::1] perm = perm_arr
    cdef double[::1] ell = ell_arr
    cdef double[::1] bs = bs_arr
    cdef Py_ssize_t j, m, K = M
    with nogil:
        for j in range(n - 2):
            if j % 2 == 1 and fabs(A[j + 2, j]) > fabs(A[j + 1, j]):
                _swap_idx(A, L, perm, j + 1, j + 2, j + 1)
                for m in range((j + 1) // 2, M):
                    bs[m] = -bs[m]
            if not _eliminate(A, L, ell, j, growth_limit):
                K = (j + 2) // 2
                break
    t = np.array([A[k, k + 1] for k in range(n - 1)], dtype=np.float64)
    return t, L_arr, perm_arr, bs_arr, K


def adjugate_weights(t_in, w_in):
    """Weighted sum of Pfaffian adjugates of the leading blocks of T."""
    cdef double[::1] t = np.ascontiguousarray(t_in, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef Py_ssize_t M = w.shape[0]
    cdef Py_ssize_t n = 2 * M
    Z_arr = np.zeros((n, n))
    R_arr = np.zeros(n)
    cdef double[:, ::1] Z = Z_arr
    cdef double[::1] R = R_arr
    cdef Py_ssize_t i, j
    cdef double pre, mid, v
    if M == 0:
        return Z_arr
    with nogil:
        R[n - 1] = w[M - 1]
        j = n - 3
        while j >= 0:
            R[j] = w[(j + 1) // 2 - 1] + t[j + 1] * R[j + 2]
            j -= 2
        pre = 1.0
        i = 0
        while i < n:
            mid = 1.0
            j = i + 1
            while j < n:
                v = pre * mid * R[j]
                Z[j, i] = v
                Z[i, j] = -v
                if j < n - 1:
                    mid *= t[j]
                j += 2
            if i < n - 1:
                pre *= t[i]
            i += 2
    return Z_arr
