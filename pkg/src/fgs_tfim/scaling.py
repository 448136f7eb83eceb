"""Finite-size scaling: entropy peaks, threshold extrapolation and central charges.

Sweeps are organised as independent *jobs* (one per chain length, or per
decay exponent) that run on a process pool. Every job gets its RNG seed
from ``(base seed, job key)`` alone, so results do not depend on the worker
count. Inside a job, consecutive solves are warm started from the nearest
already-solved angle; the remaining restarts stay random.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import fminbound
from scipy.stats import linregress

from .model import ModelSpec
from .observables import half_chain_entropy
from .solvers import SolverOptions, SolveResult, solve

CSV_COLUMNS = ("N", "alpha", "theta", "energy", "entropy", "method", "converged", "seed")
DEFAULT_BRACKET = (0.15 * math.pi, 0.45 * math.pi)
THETA_XTOL = 1e-4 * math.pi
DEFAULT_EXCLUDE = frozenset({20, 30, 40})
#: reference GHF thresholds theta_c/pi and their uncertainties, keyed by alpha
REFERENCE_THRESHOLDS = {
    1.0: (0.3534, 0.0004),
    1.25: (0.3357, 0.0001),
    1.5: (0.3218, 0.0001),
    1.75: (0.3106, 0.0001),
    2.0: (0.3013, 0.0002),
    2.25: (0.2932, 0.0002),
    2.5: (0.2865, 0.0001),
    2.75: (0.2807, 0.0002),
    3.0: (0.2760, 0.0002),
}
#: entropy wiggles below this are solver noise, not a second peak
UNIMODAL_TOL = 1e-6


@dataclass(frozen=True)
class ScanPoint:
    N: int
    alpha: str
    theta: float
    energy: float
    entropy: float
    method: str
    converged: bool
    seed: int

    def row(self) -> list:
        return [self.N, self.alpha, repr(self.theta), repr(self.energy),
                repr(self.entropy), self.method, int(self.converged), self.seed]


@dataclass(frozen=True)
class ScalingFit:
    """Linear least-squares fit ``y = intercept + slope * x``.

    ``kind='threshold'``: ``x = 1/N``, ``y = theta_max``; params ``theta_c``, ``a``.
    ``kind='central_charge'``: ``x = log N``, ``y = S``; params ``c = 6 slope``, ``B``.
    """

    kind: str
    params: dict
    stderr: dict
    Ns: tuple
    y: tuple
    residuals: tuple
    excluded: tuple = ()

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ThetaMax:
    theta: float
    entropy: float
    bracket: tuple
    evaluations: int
    unimodal: bool
    converged: bool
    samples: tuple = field(default=(), repr=False)


def job_seed(base: int, *key: int) -> int:
    """Seed for one job, a pure function of the base seed and the job key."""
    ss = np.random.SeedSequence(entropy=int(base), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _alpha_key(alpha) -> str:
    return str(ModelSpec(2, 0.0, alpha).alpha)


def solve_point(N, alpha, theta, opts: SolverOptions, initial=None):
    """Solve one ``(N, alpha, theta)`` and package it as a :class:`ScanPoint`."""
    res = solve(ModelSpec(N, theta, alpha), opts, initial=initial)
    S = half_chain_entropy(res.gamma)
    pt = ScanPoint(int(N), _alpha_key(alpha), float(theta), res.energy, S,
                   opts.method, res.converged, opts.seed)
    return pt, res


class _WarmObjective:
    """``theta -> S_{N/2}`` with a cache of converged states for warm starts."""

    def __init__(self, N, alpha, opts: SolverOptions):
        self.N, self.alpha, self.opts = N, alpha, opts
        self.states: dict[float, SolveResult] = {}
        self.points: dict[float, ScanPoint] = {}

    def __call__(self, theta: float) -> float:
        theta = float(theta)
        if theta in self.points:
            return self.points[theta].entropy
        initial = None
        if self.states:
            near = min(self.states, key=lambda t: abs(t - theta))
            initial = self.states[near].gamma
        pt, res = solve_point(self.N, self.alpha, theta, self.opts, initial)
        self.states[theta] = res
        self.points[theta] = pt
        return pt.entropy

    def all_converged(self) -> bool:
        return all(p.converged for p in self.points.values())


def _is_unimodal(samples, tol=UNIMODAL_TOL) -> bool:
    ys = np.array([s for _, s in sorted(samples)])
    if ys.size < 3:
        return True
    k = int(np.argmax(ys))
    return bool(np.all(np.diff(ys[: k + 1]) >= -tol) and np.all(np.diff(ys[k:]) <= tol))


def _maximise(fun, bracket, xtol):
    samples = []

    def neg(t):
        s = fun(t)
        samples.append((float(t), float(s)))
        return -s

    t = fminbound(neg, bracket[0], bracket[1], xtol=xtol, disp=0)
    return float(t), samples


def find_theta_max(N: int, alpha, opts: SolverOptions | None = None,
                   bracket=DEFAULT_BRACKET, objective: Callable[[float], float] | None = None,
                   xtol: float = THETA_XTOL) -> ThetaMax:
    """Angle maximising the half-chain entropy, by bounded Brent search.

    ``objective`` replaces the ground-state entropy (test hook). If the
    sampled curve is not unimodal, or the maximum sits on the bracket edge,
    the bracket is widened by half its width on each side and the search is
    repeated once; a second failure is reported through ``unimodal=False``.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0.0 < lo < hi < math.pi / 2 + 1e-12:
        raise ValueError(f"bracket must satisfy 0 < lo < hi <= pi/2, got {bracket}")
    opts = opts or SolverOptions()
    fun = objective if objective is not None else _WarmObjective(N, alpha, opts)
    all_samples = []
    for attempt in range(2):
        t, samples = _maximise(fun, (lo, hi), xtol)
        all_samples.extend(samples)
        edge = min(t - lo, hi - t) < 2 * xtol
        ok = _is_unimodal(samples) and not edge
        if ok or attempt == 1:
            break
        w = 0.5 * (hi - lo)
        lo, hi = max(lo - w, 1e-3), min(hi + w, math.pi / 2)
    converged = fun.all_converged() if isinstance(fun, _WarmObjective) else True
    return ThetaMax(theta=t, entropy=float(fun(t)), bracket=(lo, hi),
                    evaluations=len(all_samples), unimodal=ok, converged=converged,
                    samples=tuple(sorted(set(all_samples))))


def _linear_fit(x, y):
    r = linregress(x, y)
    resid = np.asarray(y) - (r.intercept + r.slope * np.asarray(x))
    return r, tuple(float(v) for v in resid)


def _validated(rows, what):
    rows = [(int(n), float(v)) for n, v in rows]
    Ns = [n for n, _ in rows]
    if len(set(Ns)) != len(Ns):
        raise ValueError(f"{what}: repeated N values {sorted(Ns)}")
    if len(rows) < 3:
        raise ValueError(f"{what}: need at least 3 distinct N, got {len(rows)}")
    return sorted(rows)


def fit_threshold(rows: Sequence[tuple]) -> ScalingFit:
    """Least squares of ``theta_max`` against ``1/N``.

    Returns ``theta_c`` (intercept) and ``a`` (slope) with standard errors.
    """
    rows = _validated(rows, "fit_threshold")
    N = np.array([n for n, _ in rows], dtype=float)
    y = np.array([v for _, v in rows])
    r, resid = _linear_fit(1.0 / N, y)
    return ScalingFit(
        kind="threshold",
        params={"theta_c": float(r.intercept), "a": float(r.slope)},
        stderr={"theta_c": float(r.intercept_stderr), "a": float(r.stderr)},
        Ns=tuple(int(n) for n in N),
        y=tuple(float(v) for v in y),
        residuals=resid,
    )


def fit_central_charge(rows: Sequence[tuple], exclude=DEFAULT_EXCLUDE) -> ScalingFit:
    """Least squares of ``S`` against ``log N`` with ``N`` in ``exclude`` dropped."""
    exclude = tuple(sorted(int(n) for n in exclude))
    kept = [(n, s) for n, s in rows if int(n) not in exclude]
    kept = _validated(kept, "fit_central_charge")
    N = np.array([n for n, _ in kept], dtype=float)
    y = np.array([v for _, v in kept])
    r, resid = _linear_fit(np.log(N), y)
    return ScalingFit(
        kind="central_charge",
        params={"c": 6.0 * float(r.slope), "B": float(r.intercept)},
        stderr={"c": 6.0 * float(r.stderr), "B": float(r.intercept_stderr)},
        Ns=tuple(int(n) for n in N),
        y=tuple(float(v) for v in y),
        residuals=resid,
        excluded=exclude,
    )


# -- sweeps ----------------------------------------------------------------------


def scan_theta(N: int, alpha, thetas, opts: SolverOptions, warm: bool = True) -> list[ScanPoint]:
    """Solve along an angle grid, warm starting each point from the previous one."""
    out = []
    prev = None
    for th in thetas:
        pt, res = solve_point(N, alpha, th, opts, prev.gamma if (warm and prev) else None)
        out.append(pt)
        prev = res
    return out


def _run_jobs(fn, jobs, workers):
    workers = resolve_workers(workers, len(jobs))
    if workers <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*jobs)))


def resolve_workers(workers, n_jobs: int) -> int:
    if workers is None or workers <= 0:
        workers = os.cpu_count() or 1
    return max(1, min(int(workers), n_jobs))


def _theta_max_job(N, alpha, opts, bracket, xtol):
    return find_theta_max(N, alpha, opts, bracket=bracket, xtol=xtol)


def critical_point(alpha, Ns, opts: SolverOptions | None = None, bracket=DEFAULT_BRACKET,
                   workers=1, xtol: float = THETA_XTOL):
    """``theta_max`` for every ``N`` and the threshold fit over converged sizes.

    Returns ``(results, fit)`` where ``results`` maps ``N`` to :class:`ThetaMax`;
    ``fit`` is ``None`` when fewer than 3 sizes converged.
    """
    opts = opts or SolverOptions()
    Ns = [int(n) for n in Ns]
    jobs = [(n, alpha, replace(opts, seed=job_seed(opts.seed, n)), bracket, xtol) for n in Ns]
    found = _run_jobs(_theta_max_job, jobs, workers)
    results = dict(zip(Ns, found))
    rows = [(n, r.theta) for n, r in results.items() if r.converged]
    fit = fit_threshold(rows) if len(rows) >= 3 else None
    return results, fit


def central_charge_at_peak(alpha, Ns, opts: SolverOptions | None = None,
                           bracket=DEFAULT_BRACKET, exclude=DEFAULT_EXCLUDE, workers=1,
                           xtol: float = THETA_XTOL):
    """Fit ``S_max(N) = c/6 log N + B`` along the entropy ridge ``theta_max(N)``."""
    results, _ = critical_point(alpha, Ns, opts, bracket, workers, xtol)
    rows = [(n, r.entropy) for n, r in results.items() if r.converged]
    return results, fit_central_charge(rows, exclude)


def _scan_job(N, alpha, thetas, opts):
    return scan_theta(N, alpha, thetas, opts)


def effective_charge_sweep(alpha, thetas, Ns, opts: SolverOptions | None = None,
                           exclude=(), workers=1):
    """Central charge fitted at each angle of a grid inside ``(0, pi/4)``.

    Each chain length is one job scanning the whole grid with warm starts.
    Returns ``(fits, points)``: ``fits`` is a list of ``(theta, ScalingFit)``,
    ``points`` all scan rows (unconverged ones stay in, flagged).

    The default is ITE with a single start per chain: the grid is entered at
    small angle, where the all-down sector holds the minimum, and warm starts
    carry it along. A second start in the opposite parity sector would crawl
    for thousands of iterations on an almost flat landscape there.
    """
    thetas = [float(t) for t in thetas]
    if any(not 0.0 < t < math.pi / 4 for t in thetas):
        raise ValueError("effective-charge grid must lie inside (0, pi/4)")
    opts = opts or SolverOptions(method="ite", restarts=1)
    Ns = [int(n) for n in Ns]
    jobs = [(n, alpha, thetas, replace(opts, seed=job_seed(opts.seed, n))) for n in Ns]
    scans = _run_jobs(_scan_job, jobs, workers)
    points = [p for scan in scans for p in scan]
    fits = []
    for k, th in enumerate(thetas):
        rows = [(scan[k].N, scan[k].entropy) for scan in scans]
        fits.append((th, fit_central_charge(rows, exclude)))
    return fits, points


def _phase_job(N, alpha, thetas, opts):
    return scan_theta(N, alpha, thetas, opts)


def phase_diagram(N: int, alphas, thetas, opts: SolverOptions | None = None, workers=1):
    """Half-chain entropy on an ``alpha x theta`` grid at fixed ``N``."""
    opts = opts or SolverOptions()
    jobs = [(N, a, [float(t) for t in thetas], replace(opts, seed=job_seed(opts.seed, N, k)))
            for k, a in enumerate(alphas)]
    scans = _run_jobs(_phase_job, jobs, workers)
    return [p for scan in scans for p in scan]


# -- output ----------------------------------------------------------------------


def write_scan_csv(path, points: Sequence[ScanPoint], preamble: str | None = None) -> None:
    """CSV in :data:`CSV_COLUMNS` order. ``preamble`` lines are written as ``#`` comments."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if preamble:
            for line in preamble.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for p in points:
            w.writerow(p.row())


def read_scan_csv(path) -> list[ScanPoint]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
    return [
        ScanPoint(int(r["N"]), r["alpha"], float(r["theta"]), float(r["energy"]),
                  float(r["entropy"]), r["method"], bool(int(r["converged"])), int(r["seed"]))
        for r in reader
    ]


def write_fit_json(path, fit: ScalingFit, extra: dict | None = None) -> None:
    record = fit.to_dict()
    if extra:
        record.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
