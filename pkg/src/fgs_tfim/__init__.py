"""Generalized Hartree-Fock ground states of the long-range transverse-field Ising chain."""

__version__ = "0.1.0"

from .gaussian import (
    CovarianceMatrix,
    energy,
    energy_and_mean_field,
    fermion_parity,
    mean_field,
    random_pure_covariance,
    wick_expectation,
)
from .model import NEAREST_NEIGHBOR, CouplingTable, ModelSpec, build_couplings
from .observables import Subsystem, entanglement_entropy, half_chain_entropy
from .pfaffian import BACKEND, pfaffian, pfaffian_gradient, principal_submatrix
from .solvers import SolveResult, SolverOptions, ite_step, solve, zt_iterate

__all__ = [
    "BACKEND",
    "CouplingTable",
    "CovarianceMatrix",
    "ModelSpec",
    "NEAREST_NEIGHBOR",
    "SolveResult",
    "SolverOptions",
    "Subsystem",
    "build_couplings",
    "energy",
    "energy_and_mean_field",
    "entanglement_entropy",
    "fermion_parity",
    "half_chain_entropy",
    "ite_step",
    "mean_field",
    "pfaffian",
    "pfaffian_gradient",
    "principal_submatrix",
    "random_pure_covariance",
    "solve",
    "wick_expectation",
    "zt_iterate",
]
