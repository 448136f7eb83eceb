"""Pure fermionic Gaussian states and the variational energy of the Ising chain.

Majorana operators are numbered 0..2N-1; site ``p`` owns ``2p`` and ``2p+1``.
The Jordan-Wigner convention is ``a_{2p} = Z_0...Z_{p-1} X_p`` and
``a_{2p+1} = Z_0...Z_{p-1} Y_p``, so ``Z_p = -i a_{2p} a_{2p+1}`` and the
covariance matrix ``Gamma[l, m] = i <a_l a_m>`` (l != m) satisfies
``<Z_p> = -Gamma[2p, 2p+1]``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import CouplingTable
from .pfaffian import nested_pfaffians, pfaffian, principal_submatrix

PURITY_TOL = 1e-8

_OMEGA_BLOCK = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class CovarianceMatrix:
    """Real antisymmetric ``2N x 2N`` Majorana covariance matrix."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise ValueError(f"covariance must be 2N x 2N, got {g.shape}")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def N(self) -> int:
        return self.gamma.shape[0] // 2

    def purity_error(self) -> float:
        return purity_error(self.gamma)

    def is_pure(self, tol: float = PURITY_TOL) -> bool:
        return self.purity_error() <= tol


def _gamma(state) -> np.ndarray:
    if isinstance(state, CovarianceMatrix):
        return state.gamma
    return np.asarray(state, dtype=np.float64)


def purity_error(gamma) -> float:
    """``max |Gamma^2 + 1|``; zero for a pure state."""
    g = _gamma(gamma)
    return float(np.max(np.abs(g @ g + np.eye(g.shape[0]))))


def purify(gamma) -> np.ndarray:
    """Nearest pure covariance: eigenvalues of ``i Gamma`` pushed to +-1.

    This is the orthogonal polar factor of ``Gamma``, which stays skew.
    """
    g = _gamma(gamma)
    u, _, vt = np.linalg.svd(g)
    q = u @ vt
    return 0.5 * (q - q.T)


def block_omega(signs) -> np.ndarray:
    """Direct sum of ``s_k [[0, 1], [-1, 0]]`` blocks."""
    signs = np.asarray(signs, dtype=np.float64)
    N = signs.shape[0]
    out = np.zeros((2 * N, 2 * N))
    idx = 2 * np.arange(N)
    out[idx, idx + 1] = signs
    out[idx + 1, idx] = -signs
    return out


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR with sign-fixed diagonal)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def fermion_parity(state) -> int:
    """Sign of ``<prod_p Z_p>`` for a pure state, ``(-1)^N Pf(Gamma)``."""
    g = _gamma(state)
    N = g.shape[0] // 2
    return int(np.sign((-1) ** N * pfaffian(g)))


def random_pure_covariance(N: int, seed=None, *, haar: bool = True,
                           random_signs: bool = True, parity: int | None = None) -> CovarianceMatrix:
    """Random pure state ``O^T Omega O``.

    ``Omega`` is block diagonal with random block signs, ``O`` is Haar. The
    keyword switches turn either ingredient off (``O = 1``, all signs +1).
    ``parity=+-1`` conditions on the fermion parity by reflecting Majorana 0
    when needed; Haar measure is invariant under that reflection.
    """
    if parity not in (None, 1, -1):
        raise ValueError(f"parity must be +1, -1 or None, got {parity}")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=N) if random_signs else np.zeros(N, dtype=int)
    omega = block_omega(1.0 - 2.0 * bits)
    if not haar:
        g = omega
    else:
        O = haar_orthogonal(2 * N, rng)
        g = O.T @ omega @ O
        g = 0.5 * (g - g.T)
    if parity is not None and fermion_parity(g) != parity:
        g[0, :] *= -1.0
        g[:, 0] *= -1.0
    return CovarianceMatrix(g)


def wick_expectation(state, indices) -> complex:
    """``<a_{i1} a_{i2} ... a_{i2m}>`` for strictly increasing indices."""
    g = _gamma(state)
    idx = np.asarray(indices, dtype=np.intp).reshape(-1)
    if idx.size % 2:
        raise ValueError("an odd number of Majorana operators has zero weight; pass an even count")
    sub = principal_submatrix(g, idx)
    m = idx.size // 2
    return complex((-1j) ** m * pfaffian(sub))


def _check_sizes(g, couplings: CouplingTable):
    if g.shape != (2 * couplings.N, 2 * couplings.N):
        raise ValueError(
            f"covariance of shape {g.shape} does not match N={couplings.N} couplings"
        )


def _pair_weights(couplings: CouplingTable, p: int) -> np.ndarray:
    """Weights ``(-1)^m J[p, p+m]`` with trailing zeros stripped."""
    row = couplings.J[p, p + 1:]
    nz = np.flatnonzero(row)
    if nz.size == 0:
        return row[:0]
    w = row[: nz[-1] + 1].copy()
    w[::2] *= -1.0
    return w


def energy_and_mean_field(state, couplings: CouplingTable, gradient: bool = True):
    """Energy and (optionally) the mean-field matrix ``4 dE/dGamma``.

    Both come out of the same nested Pfaffian sweep, one per left site ``p``.
    """
    g = _gamma(state)
    _check_sizes(g, couplings)
    g = 0.5 * (g - g.T)
    N = couplings.N
    h = couplings.h
    idx = 2 * np.arange(N)
    E = -float(np.dot(h, g[idx, idx + 1]))
    H = None
    if gradient:
        H = np.zeros_like(g)
        H[idx, idx + 1] = -2.0 * h
        H[idx + 1, idx] = 2.0 * h
    for p in range(N - 1):
        w = _pair_weights(couplings, p)
        M = w.size
        if M == 0:
            continue
        lo = 2 * p + 1
        hi = lo + 2 * M
        pfs, grad = nested_pfaffians(g[lo:hi, lo:hi], w, gradient=gradient)
        E += float(np.dot(w, pfs))
        if gradient:
            H[lo:hi, lo:hi] += 4.0 * grad
    if gradient:
        H = 0.5 * (H - H.T)
    return E, H


def energy(state, couplings: CouplingTable) -> float:
    """Variational energy ``<H>`` of the Gaussian state."""
    return energy_and_mean_field(state, couplings, gradient=False)[0]


def mean_field(state, couplings: CouplingTable) -> np.ndarray:
    """Mean-field matrix ``H_mf[l, m] = 4 dE/dGamma[l, m]``."""
    return energy_and_mean_field(state, couplings, gradient=True)[1]


# -- checkpoints ---------------------------------------------------------------

MAGIC = b"FGS1"


def write_checkpoint(path, state) -> None:
    """Binary dump: ``FGS1``, uint32 N, upper triangle (row major) as <f8."""
    g = _gamma(state)
    N = g.shape[0] // 2
    iu = np.triu_indices(2 * N, k=1)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", N))
        fh.write(np.ascontiguousarray(g[iu], dtype="<f8").tobytes())


def read_checkpoint(path) -> CovarianceMatrix:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not an FGS1 checkpoint")
    (N,) = struct.unpack("<I", data[4:8])
    n = 2 * N
    count = n * (n - 1) // 2
    vals = np.frombuffer(data, dtype="<f8", count=count, offset=8)
    if vals.size != count or len(data) != 8 + 8 * count:
        raise ValueError(f"{path}: truncated checkpoint")
    return CovarianceMatrix(_from_upper(vals, n))


def _from_upper(vals, n):
    g = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    g[iu] = vals
    return g - g.T


def write_checkpoint_csv(path, state) -> None:
    """Text twin of the binary checkpoint: header ``N``, one upper-triangle value per line."""
    g = _gamma(state)
    n = g.shape[0]
    iu = np.triu_indices(n, k=1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"N,{n // 2}\n")
        for v in g[iu]:
            fh.write(f"{float(v)!r}\n")


def read_checkpoint_csv(path) -> CovarianceMatrix:
    lines = Path(path).read_text(encoding="utf-8").split()
    key, N = lines[0].split(",")
    if key != "N":
        raise ValueError(f"{path}: missing N header")
    n = 2 * int(N)
    vals = np.array([float(x) for x in lines[1:]])
    if vals.size != n * (n - 1) // 2:
        raise ValueError(f"{path}: expected {n * (n - 1) // 2} values, got {vals.size}")
    return CovarianceMatrix(_from_upper(vals, n))
