"""Exact diagonalisation of the spin chain for small N (ground truth for tests).

Basis states are integers; site ``p`` is bit ``N-1-p`` (site 0 is the leftmost
tensor factor) and bit value 0 means ``Z_p = +1``. The Hamiltonian conserves
the parity ``P = prod_p Z_p``, so ground states are searched per parity
sector. Majorana operators follow the same Jordan-Wigner convention as
:mod:`fgs_tfim.gaussian`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .gaussian import CovarianceMatrix
from .model import ModelSpec, build_couplings

MAX_N = 14
DENSE_MAX_N = 10
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class DenseSpinState:
    N: int
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128)
        if a.shape != (2**self.N,):
            raise ValueError(f"expected {2**self.N} amplitudes, got {a.shape}")
        norm = np.linalg.norm(a)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state is not normalised (|psi| = {norm})")
        object.__setattr__(self, "amplitudes", a)


@dataclass(frozen=True)
class ExactGround:
    """Lowest eigenpair; ``gap`` is to the next level across both sectors."""

    energy: float
    state: DenseSpinState
    parity: int
    gap: float
    degenerate: bool
    sector_energies: dict


def _bits(N):
    s = np.arange(2**N)
    shifts = N - 1 - np.arange(N)
    return (s[:, None] >> shifts[None, :]) & 1


def _parity(N):
    return 1 - 2 * (_bits(N).sum(axis=1) % 2)


class SpinHamiltonian:
    """Matrix-free ``H = sum h Z + sum J X X`` on the full 2^N space."""

    def __init__(self, spec: ModelSpec):
        if spec.N > MAX_N:
            raise ValueError(f"exact diagonalisation limited to N <= {MAX_N}, got {spec.N}")
        self.N = N = spec.N
        c = build_couplings(spec)
        z = 1.0 - 2.0 * _bits(N)
        self.diag = z @ c.h
        self.flips = []
        for p in range(N):
            for q in range(p + 1, N):
                if c.J[p, q] != 0.0:
                    mask = (1 << (N - 1 - p)) | (1 << (N - 1 - q))
                    self.flips.append((mask, c.J[p, q]))
        self._states = np.arange(2**N)

    def matvec(self, v):
        out = self.diag * v
        for mask, J in self.flips:
            out += J * v[self._states ^ mask]
        return out

    def dense(self) -> np.ndarray:
        dim = 2**self.N
        H = np.diag(self.diag).astype(np.float64)
        for mask, J in self.flips:
            H[self._states, self._states ^ mask] += J
        return H


def lanczos(matvec, v0, k_max=400, tol=1e-12, n_eig=2):
    """Lanczos with full reorthogonalisation.

    Returns the ``n_eig`` lowest Ritz values and the lowest Ritz vector.
    Stops when the lowest Ritz pair has residual below ``tol`` (relative to
    the spectral scale) or the Krylov space is exhausted.
    """
    dim = v0.shape[0]
    k_max = min(k_max, dim)
    V = np.zeros((k_max, dim), dtype=v0.dtype)
    alpha = np.zeros(k_max)
    beta = np.zeros(k_max)
    v = v0 / np.linalg.norm(v0)
    k = 0
    theta = None
    while True:
        V[k] = v
        w = matvec(v)
        alpha[k] = np.real(np.vdot(v, w))
        w = w - V[: k + 1].T @ (V[: k + 1].conj() @ w)
        w = w - V[: k + 1].T @ (V[: k + 1].conj() @ w)
        b = np.linalg.norm(w)
        T = np.diag(alpha[: k + 1]) + np.diag(beta[:k], 1) + np.diag(beta[:k], -1)
        theta, S = np.linalg.eigh(T)
        scale = max(1.0, np.max(np.abs(theta)))
        if b * abs(S[-1, 0]) < tol * scale or k + 1 == k_max or b < 1e-14 * scale:
            break
        beta[k] = b
        v = w / b
        k += 1
    x = V[: k + 1].T @ S[:, 0]
    x /= np.linalg.norm(x)
    return theta[:n_eig], x


def exact_ground(spec: ModelSpec, parity: int | None = None) -> ExactGround:
    """Ground energy and state, optionally restricted to one parity sector.

    Dense diagonalisation up to N = 10, matrix-free Lanczos above.
    """
    H = SpinHamiltonian(spec)
    N = spec.N
    par = _parity(N)
    sectors = [parity] if parity is not None else [1, -1]
    levels = {}
    vectors = {}
    dense = H.dense() if N <= DENSE_MAX_N else None
    for s in sectors:
        idx = np.flatnonzero(par == s)
        if dense is not None:
            ev, U = np.linalg.eigh(dense[np.ix_(idx, idx)])
            vals, vec = ev[:2], U[:, 0]
        else:
            rng = np.random.default_rng(12345)
            full = np.zeros(2**N)

            def mv(x, idx=idx):
                full[:] = 0.0
                full[idx] = x
                return H.matvec(full)[idx]

            vals, vec = lanczos(mv, rng.standard_normal(idx.size))
        psi = np.zeros(2**N, dtype=np.complex128)
        psi[idx] = vec / np.linalg.norm(vec)
        levels[s] = np.asarray(vals, dtype=float)
        vectors[s] = psi
    best = min(sectors, key=lambda s: levels[s][0])
    e0 = float(levels[best][0])
    others = sorted(np.concatenate([levels[s] for s in sectors]))
    gap = float(others[1] - others[0]) if len(others) > 1 else float("inf")
    # a global phase convention keeps outputs reproducible
    psi = vectors[best]
    k = int(np.argmax(np.abs(psi)))
    psi = psi * (abs(psi[k]) / psi[k])
    return ExactGround(
        energy=e0,
        state=DenseSpinState(N, psi),
        parity=int(best),
        gap=gap,
        degenerate=gap < DEGENERACY_TOL,
        sector_energies={int(s): float(levels[s][0]) for s in sectors},
    )


def exact_entropy(state: DenseSpinState, sites) -> float:
    """Von Neumann entropy (nats) of the reduced state on ``sites`` (0-based)."""
    N = state.N
    if N > MAX_N:
        raise ValueError(f"N <= {MAX_N} required")
    sites = sorted(set(int(s) for s in sites))
    if len(sites) != len(list(sites)) or any(s < 0 or s >= N for s in sites):
        raise ValueError(f"invalid partition {sites} for N={N}")
    rest = [s for s in range(N) if s not in sites]
    psi = state.amplitudes.reshape((2,) * N).transpose(sites + rest)
    psi = psi.reshape(2 ** len(sites), 2 ** len(rest))
    sv = np.linalg.svd(psi, compute_uv=False)
    p = sv**2
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def _apply_majorana(N, l, v):
    """``a_l v`` with ``a_{2p} = Z..Z X_p`` and ``a_{2p+1} = Z..Z Y_p``."""
    p, kind = divmod(l, 2)
    states = np.arange(2**N)
    bits = _bits(N)
    string = 1 - 2 * (bits[:, :p].sum(axis=1) % 2)
    phase = string.astype(np.complex128)
    if kind == 1:
        phase *= np.where(bits[:, p] == 0, 1j, -1j)
    out = np.empty_like(v)
    out[states ^ (1 << (N - 1 - p))] = phase * v
    return out


def majorana_operator(N: int, l: int) -> sp.csr_matrix:
    """Sparse matrix of the Majorana operator ``a_l``."""
    dim = 2**N
    cols = []
    data = []
    rows = []
    for s in range(dim):
        e = np.zeros(dim, dtype=np.complex128)
        e[s] = 1.0
        out = _apply_majorana(N, l, e)
        r = int(np.flatnonzero(out)[0])
        rows.append(r)
        cols.append(s)
        data.append(out[r])
    return sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))


def exact_correlator(state: DenseSpinState, indices) -> complex:
    """``<psi| a_{i1} ... a_{i2m} |psi>`` by explicit Jordan-Wigner strings."""
    idx = [int(i) for i in indices]
    if len(idx) % 2:
        raise ValueError("odd number of Majorana operators")
    N = state.N
    if any(i < 0 or i >= 2 * N for i in idx):
        raise ValueError("Majorana index out of range")
    v = state.amplitudes
    for l in reversed(idx):
        v = _apply_majorana(N, l, v)
    return complex(np.vdot(state.amplitudes, v))


def gaussian_state_vector(gamma) -> DenseSpinState:
    """Spin-basis vector of the pure Gaussian state with covariance ``gamma``.

    It is the ground state of ``-(i/4) sum_lm gamma_lm a_l a_m``, whose
    single-particle levels are all +-1 for a pure state.
    """
    g = gamma.gamma if isinstance(gamma, CovarianceMatrix) else np.asarray(gamma, dtype=np.float64)
    n = g.shape[0]
    N = n // 2
    if N > 8:
        raise ValueError("dense Gaussian state reconstruction limited to N <= 8")
    ops = [majorana_operator(N, l) for l in range(n)]
    Hq = sp.csr_matrix((2**N, 2**N), dtype=np.complex128)
    for l in range(n):
        for m in range(l + 1, n):
            if g[l, m] != 0.0:
                Hq = Hq + (-0.5j * g[l, m]) * (ops[l] @ ops[m])
    ev, U = np.linalg.eigh(Hq.toarray())
    if ev[1] - ev[0] < 1e-6:
        raise ValueError("covariance is not pure: Gaussian ground state is degenerate")
    psi = U[:, 0]
    k = int(np.argmax(np.abs(psi)))
    psi = psi * (abs(psi[k]) / psi[k])
    return DenseSpinState(N, psi / np.linalg.norm(psi))
