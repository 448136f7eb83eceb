"""Entanglement entropy of a block of spins from the covariance matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .gaussian import CovarianceMatrix

#: eigenvalues of i Gamma_A may overshoot +-1 by this much before it is an error
SPECTRUM_GUARD = 1e-8


@dataclass(frozen=True)
class Subsystem:
    """A set of spin sites (0-based), stored sorted."""

    sites: tuple

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise ValueError(f"duplicate sites in {sites}")
        if any(s < 0 for s in sites):
            raise ValueError(f"negative site index in {sites}")
        object.__setattr__(self, "sites", tuple(sorted(sites)))

    @classmethod
    def left_half(cls, N: int) -> "Subsystem":
        """Sites ``0..N//2-1``."""
        return cls(tuple(range(N // 2)))

    @property
    def majoranas(self) -> np.ndarray:
        """Majorana indices ``2p, 2p+1`` of every site, ascending."""
        s = np.asarray(self.sites, dtype=np.intp)
        return np.column_stack([2 * s, 2 * s + 1]).reshape(-1)

    @property
    def contiguous(self) -> bool:
        return not self.sites or self.sites[-1] - self.sites[0] + 1 == len(self.sites)

    def complement(self, N: int) -> "Subsystem":
        return Subsystem(tuple(p for p in range(N) if p not in self.sites))

    def check(self, N: int) -> None:
        if self.sites and self.sites[-1] >= N:
            raise ValueError(f"site {self.sites[-1]} out of range for N={N}")


def entanglement_spectrum(state, part: Subsystem) -> np.ndarray:
    """Eigenvalues of the Hermitian matrix ``i Gamma_A``, ascending."""
    g = state.gamma if isinstance(state, CovarianceMatrix) else np.asarray(state, float)
    part.check(g.shape[0] // 2)
    idx = part.majoranas
    sub = g[np.ix_(idx, idx)]
    if sub.size == 0:
        return np.zeros(0)
    return np.linalg.eigvalsh(1j * sub)


def entanglement_entropy(state, part: Subsystem) -> float:
    """Von Neumann entropy in nats of the spins in ``part``.

    Every eigenvalue ``nu`` of ``i Gamma_A`` contributes
    ``-(1+nu)/2 log((1+nu)/2)``; the spectrum is symmetric so this sums the
    binary entropy of each mode once.

    This is the entropy of the fermionic modes on ``part``. It equals the
    entropy of the spins only for a contiguous block (or its complement):
    between separated sites the Jordan-Wigner string carries extra
    correlations that the Majorana submatrix does not see.
    """
    nu = entanglement_spectrum(state, part)
    if nu.size and np.max(np.abs(nu)) > 1.0 + SPECTRUM_GUARD:
        raise ValueError(
            f"eigenvalue {np.max(np.abs(nu)):.12g} of i*Gamma_A outside [-1, 1]; "
            "covariance matrix is corrupted"
        )
    x = 0.5 * (1.0 + np.clip(nu, -1.0, 1.0))
    S = -float(np.sum(xlogy(x, x)))
    return max(S, 0.0)


def half_chain_entropy(state) -> float:
    g = state.gamma if isinstance(state, CovarianceMatrix) else np.asarray(state, float)
    return entanglement_entropy(g, Subsystem.left_half(g.shape[0] // 2))
