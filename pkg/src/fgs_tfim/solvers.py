"""Ground-state searches over pure Gaussian states.

Two algorithms share the mean-field matrix ``H = 4 dE/dGamma``:

* ITE: discretised imaginary-time flow, ``Gamma <- O Gamma O^T`` with
  ``O = expm(dtau/2 [H, Gamma])``. Each step is an orthogonal conjugation,
  so purity is kept; ``dtau`` is halved whenever a step would raise the energy.
* ZT: self-consistent replacement of ``Gamma`` by ``i sgn(iH)``, optionally
  damped by mixing with the previous iterate and re-purifying.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from .gaussian import (
    PURITY_TOL,
    CovarianceMatrix,
    energy_and_mean_field,
    fermion_parity,
    purify,
    purity_error,
    random_pure_covariance,
    write_checkpoint,
)
from .model import CouplingTable, ModelSpec, build_couplings

METHODS = ("ite", "zt")
DEFAULT_MAX_ITERS = {"ite": 50_000, "zt": 5_000}
DEGENERACY_TOL = 1e-12
#: energies of two restarts closer than this count as a tie
TIE_TOL = 1e-12
#: an ITE step may raise the energy by at most this much and still be accepted
ASCENT_TOL = 1e-12


class PurityError(ValueError):
    """Input covariance drifted too far from ``Gamma^2 = -1``."""


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for :func:`solve`. ``max_iters=None`` picks the per-method default.

    ZT runs whose residual has not halved within ``stall_window`` iterations
    switch to ``mixing = stall_mixing`` for the rest of the trajectory
    (``stall_window=0`` disables this).
    """

    method: str = "zt"
    dtau: float = 0.05
    max_iters: int | None = None
    energy_tol: float = 1e-10
    grad_tol: float = 1e-7
    restarts: int = 5
    mixing: float = 1.0
    seed: int = 0
    max_halvings: int = 20
    dtau_growth: float = 1.0
    stall_window: int = 25
    stall_mixing: float = 0.5
    purity_tol: float = PURITY_TOL
    record_trace: bool = False
    checkpoint_every: int = 0
    checkpoint_path: str | None = None

    def __post_init__(self):
        method = str(self.method).lower()
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        object.__setattr__(self, "method", method)
        if not self.dtau > 0:
            raise ValueError("dtau must be positive")
        if not (self.energy_tol > 0 and self.grad_tol > 0 and self.purity_tol > 0):
            raise ValueError("tolerances must be positive")
        if int(self.restarts) < 1:
            raise ValueError("restarts must be >= 1")
        if not 0.0 < self.mixing <= 1.0:
            raise ValueError("mixing must lie in (0, 1]")
        if self.max_iters is not None and int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be >= 0")
        if self.stall_window < 0 or not 0.0 < self.stall_mixing <= 1.0:
            raise ValueError("stall_window must be >= 0 and stall_mixing in (0, 1]")
        if self.dtau_growth < 1.0:
            raise ValueError("dtau_growth must be >= 1")
        if self.checkpoint_every and not self.checkpoint_path:
            raise ValueError("checkpoint_every needs checkpoint_path")

    @property
    def iteration_cap(self) -> int:
        if self.max_iters is not None:
            return int(self.max_iters)
        return DEFAULT_MAX_ITERS[self.method]


@dataclass(frozen=True)
class SolveResult:
    gamma: CovarianceMatrix
    energy: float
    iterations: int
    converged: bool
    reason: str
    restart_index: int
    residual: float
    method: str
    seed: int | None
    energy_trace: np.ndarray | None = None
    halvings: tuple = ()
    degenerate: bool = False
    restart_energies: tuple = ()
    damped_at: int | None = None

    def summary(self) -> dict:
        return {
            "energy": self.energy,
            "iterations": self.iterations,
            "converged": self.converged,
            "reason": self.reason,
            "restart_index": self.restart_index,
            "residual": self.residual,
            "method": self.method,
            "seed": self.seed,
            "halvings": [list(h) for h in self.halvings],
            "degenerate": self.degenerate,
            "restart_energies": list(self.restart_energies),
            "damped_at": self.damped_at,
        }


def antisymmetric_expm(K) -> np.ndarray:
    """``exp(K)`` for antisymmetric ``K``; the result is orthogonal.

    Scaling and squaring can leave ~1e-15 per squaring of drift, so the
    result is snapped to the nearest orthogonal matrix if needed.
    """
    K = np.asarray(K, dtype=np.float64)
    K = 0.5 * (K - K.T)
    O = expm(K)
    n = O.shape[0]
    if np.max(np.abs(O @ O.T - np.eye(n))) > 1e-13:
        u, _, vt = np.linalg.svd(O)
        O = u @ vt
    return O


def commutator(A, B) -> np.ndarray:
    return A @ B - B @ A


def _residual(H, g) -> float:
    return float(np.max(np.abs(commutator(H, g)))) if g.size else 0.0


def _check_pure(g, tol):
    err = purity_error(g)
    if err > 10 * tol:
        raise PurityError(f"purity error {err:.3e} exceeds {10 * tol:.1e}; purify first")


def _ite_apply(g, H, dtau):
    O = antisymmetric_expm(0.5 * dtau * commutator(H, g))
    out = O @ g @ O.T
    return 0.5 * (out - out.T)


def ite_step(state, couplings: CouplingTable, dtau: float, purity_tol: float = PURITY_TOL):
    """One imaginary-time step ``O Gamma O^T``, ``O = expm(dtau/2 [H, Gamma])``."""
    if not dtau > 0:
        raise ValueError("dtau must be positive")
    g = state.gamma if isinstance(state, CovarianceMatrix) else np.asarray(state, float)
    _check_pure(g, purity_tol)
    _, H = energy_and_mean_field(g, couplings)
    return CovarianceMatrix(_ite_apply(g, H, dtau))


def _zt_apply(g, H, mixing):
    """ZT update from a precomputed mean field. Returns (Gamma', degenerate)."""
    D, U = np.linalg.eigh(1j * H)
    degenerate = bool(np.any(np.abs(D) < DEGENERACY_TOL))
    zero = np.abs(D) < DEGENERACY_TOL
    s = np.where(zero, 0.0, np.where(D >= 0.0, 1.0, -1.0))
    new = (1j * (U * s) @ U.conj().T).real
    if degenerate:
        # the kernel of iH is closed under conjugation; keep the old state there
        K = U[:, zero]
        P = (K @ K.conj().T).real
        new = purify(new + P @ g @ P)
    new = 0.5 * (new - new.T)
    if mixing < 1.0:
        new = purify((1.0 - mixing) * g + mixing * new)
    return new, degenerate


def zt_iterate(state, couplings: CouplingTable, mixing: float = 1.0,
               purity_tol: float = PURITY_TOL):
    """One self-consistency update ``Gamma' = i U sgn(D) U^dag`` where ``iH = U D U^dag``.

    Returns ``(CovarianceMatrix, degenerate)``; ``degenerate`` is set when an
    eigenvalue of ``iH`` is within 1e-12 of zero; on that kernel the
    previous state is kept and the result re-purified.
    """
    if not 0.0 < mixing <= 1.0:
        raise ValueError("mixing must lie in (0, 1]")
    g = state.gamma if isinstance(state, CovarianceMatrix) else np.asarray(state, float)
    _check_pure(g, purity_tol)
    _, H = energy_and_mean_field(g, couplings)
    new, degenerate = _zt_apply(g, H, mixing)
    return CovarianceMatrix(new), degenerate


@dataclass
class _Run:
    gamma: np.ndarray
    energy: float
    residual: float
    iterations: int
    converged: bool
    reason: str
    trace: list = field(default_factory=list)
    halvings: list = field(default_factory=list)
    degenerate: bool = False
    damped_at: int | None = None


def _checkpoint(opts, it, g):
    if opts.checkpoint_every and it % opts.checkpoint_every == 0:
        write_checkpoint(opts.checkpoint_path, g)


def _run_ite(g, couplings, opts: SolverOptions, monitor=None) -> _Run:
    E, H = energy_and_mean_field(g, couplings)
    if monitor:
        monitor(0, g, E)
    res = _residual(H, g)
    dtau = opts.dtau
    trace = [E] if opts.record_trace else []
    halvings = []
    dE = math.inf
    for it in range(1, opts.iteration_cap + 1):
        if res < opts.grad_tol and abs(dE) < opts.energy_tol:
            return _Run(g, E, res, it - 1, True, "converged", trace, halvings)
        while True:
            trial = _ite_apply(g, H, dtau)
            if purity_error(trial) > opts.purity_tol:
                trial = purify(trial)
            E_new, H_new = energy_and_mean_field(trial, couplings)
            if E_new - E <= ASCENT_TOL:
                break
            if len(halvings) >= opts.max_halvings:
                return _Run(g, E, res, it - 1, False, "dtau halving limit reached",
                            trace, halvings)
            dtau *= 0.5
            halvings.append((it, dtau))
        dE = E_new - E
        g, E, H = trial, E_new, H_new
        res = _residual(H, g)
        dtau *= opts.dtau_growth
        if opts.record_trace:
            trace.append(E)
        if monitor:
            monitor(it, g, E)
        _checkpoint(opts, it, g)
    converged = res < opts.grad_tol and abs(dE) < opts.energy_tol
    return _Run(g, E, res, opts.iteration_cap, converged,
                "converged" if converged else "iteration cap reached", trace, halvings)


def _run_zt(g, couplings, opts: SolverOptions, monitor=None) -> _Run:
    E, H = energy_and_mean_field(g, couplings)
    if monitor:
        monitor(0, g, E)
    trace = [E] if opts.record_trace else []
    degenerate = False
    dE = math.inf
    mixing = opts.mixing
    damped_at = None
    best_res, best_it = math.inf, 0
    for it in range(1, opts.iteration_cap + 1):
        res = _residual(H, g)
        if res < opts.grad_tol and abs(dE) < opts.energy_tol:
            return _Run(g, E, res, it - 1, True, "converged", trace, [], degenerate, damped_at)
        if res < 0.5 * best_res:
            best_res, best_it = res, it
        elif (opts.stall_window and damped_at is None and mixing > opts.stall_mixing
              and it - best_it >= opts.stall_window):
            # undamped ZT can lock into a two-cycle between parity sectors
            mixing = opts.stall_mixing
            damped_at = it
        g, deg = _zt_apply(g, H, mixing)
        degenerate = degenerate or deg
        E_new, H = energy_and_mean_field(g, couplings)
        dE = E_new - E
        E = E_new
        if opts.record_trace:
            trace.append(E)
        if monitor:
            monitor(it, g, E)
        _checkpoint(opts, it, g)
    res = _residual(H, g)
    converged = res < opts.grad_tol and abs(dE) < opts.energy_tol
    return _Run(g, E, res, opts.iteration_cap, converged,
                "converged" if converged else "iteration cap reached", trace, [], degenerate,
                damped_at)


def run_from(initial, couplings: CouplingTable, opts: SolverOptions, monitor=None) -> _Run:
    """Single trajectory from a given pure covariance.

    ``monitor(iteration, gamma, energy)``, if given, sees the starting point
    and every accepted iterate.
    """
    g = initial.gamma if isinstance(initial, CovarianceMatrix) else np.asarray(initial, float)
    g = np.array(g, dtype=np.float64)
    _check_pure(g, opts.purity_tol)
    if purity_error(g) > opts.purity_tol:
        g = purify(g)
    if opts.method == "ite":
        return _run_ite(g, couplings, opts, monitor)
    return _run_zt(g, couplings, opts, monitor)


def solve(spec: ModelSpec, opts: SolverOptions | None = None, initial=None) -> SolveResult:
    """Best of ``opts.restarts`` trajectories.

    Restart ``r`` starts from a random pure state with seed ``opts.seed + r``.
    Random starts alternate between the two fermion parity sectors, beginning
    with ``(-1)^N`` (ITE cannot change sector). When ``initial`` is given (a
    warm start) it replaces restart 0 and the random starts begin in the
    other sector.
    Converged runs beat unconverged ones; among those the lowest energy wins
    and ties within 1e-12 go to the lowest restart index.
    """
    opts = opts or SolverOptions()
    couplings = build_couplings(spec)
    runs = []
    seeds = []
    sector = (-1) ** spec.N
    if initial is not None:
        # cover the sector the warm start is not in first
        sector = -fermion_parity(initial)
    for r in range(int(opts.restarts)):
        if r == 0 and initial is not None:
            start, seed = initial, None
        else:
            seed = opts.seed + r
            parity = sector * (-1) ** (r - (initial is not None))
            start = random_pure_covariance(spec.N, seed, parity=parity)
        runs.append(run_from(start, couplings, opts))
        seeds.append(seed)
    pool = [i for i, r in enumerate(runs) if r.converged] or list(range(len(runs)))
    e_min = min(runs[i].energy for i in pool)
    best = min(i for i in pool if runs[i].energy <= e_min + TIE_TOL)
    run = runs[best]
    g = CovarianceMatrix(run.gamma)
    E, _ = energy_and_mean_field(g, couplings, gradient=False)
    return SolveResult(
        gamma=g,
        energy=float(E),
        iterations=run.iterations,
        converged=run.converged,
        reason=run.reason,
        restart_index=best,
        residual=run.residual,
        method=opts.method,
        seed=seeds[best],
        energy_trace=np.array(run.trace) if opts.record_trace else None,
        halvings=tuple(run.halvings),
        degenerate=run.degenerate,
        restart_energies=tuple(float(r.energy) for r in runs),
        damped_at=run.damped_at,
    )


def write_energy_trace(path, result: SolveResult) -> None:
    """CSV with columns ``iteration,energy``."""
    if result.energy_trace is None:
        raise ValueError("result carries no energy trace (set record_trace=True)")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "energy"])
        for i, e in enumerate(result.energy_trace):
            w.writerow([i, repr(float(e))])


def with_method(opts: SolverOptions, method: str) -> SolverOptions:
    return replace(opts, method=method)
