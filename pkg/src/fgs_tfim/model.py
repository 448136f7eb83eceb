"""Long-range transverse-field Ising chain with open boundaries.

    H = sum_p h_p Z_p + sum_{p<q} J_pq X_p X_q,
    h_p = cos(theta),  J_pq = sin(theta) / |p - q|**alpha.

Sites are numbered 1..N in docstrings and 0..N-1 in arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class _NearestNeighbor(enum.Enum):
    NN = "nn"

    def __repr__(self):
        return "NEAREST_NEIGHBOR"

    def __str__(self):
        return "inf"


#: ``alpha`` sentinel for the alpha -> infinity limit (only J_{p,p+1} survives).
NEAREST_NEIGHBOR = _NearestNeighbor.NN


def parse_alpha(value) -> float | _NearestNeighbor:
    """Accept a positive number, ``inf``/``nn`` or the sentinel itself."""
    if value is NEAREST_NEIGHBOR:
        return value
    if isinstance(value, str):
        key = value.strip().lower()
        if key in {"inf", "infinity", "nn", "nearest-neighbor", "nearest_neighbor"}:
            return NEAREST_NEIGHBOR
        value = float(key)
    value = float(value)
    if math.isinf(value) and value > 0:
        return NEAREST_NEIGHBOR
    if not value > 0:
        raise ValueError(f"alpha must be positive, got {value}")
    return value


@dataclass(frozen=True)
class ModelSpec:
    """Chain length, mixing angle (radians) and decay exponent."""

    N: int
    theta: float
    alpha: float | _NearestNeighbor

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))

    @property
    def nearest_neighbor(self) -> bool:
        return self.alpha is NEAREST_NEIGHBOR

    def to_dict(self) -> dict:
        return {"N": self.N, "theta": self.theta, "alpha": str(self.alpha)}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        return cls(N=int(data["N"]), theta=float(data["theta"]), alpha=data["alpha"])


@dataclass(frozen=True)
class CouplingTable:
    """Uniform transverse fields ``h`` and strictly upper-triangular ``J``."""

    h: np.ndarray
    J: np.ndarray

    @property
    def N(self) -> int:
        return self.h.shape[0]


def build_couplings(spec: ModelSpec) -> CouplingTable:
    N = spec.N
    h = np.full(N, math.cos(spec.theta))
    J = np.zeros((N, N))
    s = math.sin(spec.theta)
    if spec.nearest_neighbor:
        idx = np.arange(N - 1)
        J[idx, idx + 1] = s
    else:
        p, q = np.triu_indices(N, k=1)
        J[p, q] = s / (q - p).astype(float) ** spec.alpha
    h.setflags(write=False)
    J.setflags(write=False)
    return CouplingTable(h=h, J=J)
