"""Build acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line, collected in the terminal summary.
The finite-size pipelines (criteria 3 and 4) run a reduced chain-length set
by default; ``FGS_TFIM_FULL=1`` switches to the full ``N = 20..100`` runs
with the tight tolerance. ``FGS_TFIM_WORKERS`` caps the process pool
(default: all cores).
"""

import itertools
import math
import os
import time

import numpy as np
import pytest

from fgs_tfim.gaussian import (
    energy,
    fermion_parity,
    mean_field,
    purity_error,
    random_pure_covariance,
    wick_expectation,
)
from fgs_tfim.model import NEAREST_NEIGHBOR, ModelSpec, build_couplings
from fgs_tfim.observables import half_chain_entropy
from fgs_tfim.oracle import exact_correlator, exact_entropy, exact_ground, gaussian_state_vector
from fgs_tfim.pfaffian import pfaffian
from fgs_tfim.scaling import (
    REFERENCE_THRESHOLDS,
    critical_point,
    effective_charge_sweep,
    fit_central_charge,
    fit_threshold,
)
from fgs_tfim.solvers import SolverOptions, ite_step, run_from, solve

FULL = os.environ.get("FGS_TFIM_FULL", "") == "1"
WORKERS = int(os.environ.get("FGS_TFIM_WORKERS", "0"))

pytestmark = pytest.mark.acceptance


def _bench():
    t0 = time.perf_counter()
    return lambda: time.perf_counter() - t0


@pytest.mark.criterion(1)
def test_free_fermion_exactness(criterion):
    elapsed = _bench()
    worst_E = worst_S = 0.0
    for N in (4, 8, 12):
        for th in (0.2, 0.3, 0.45):
            spec = ModelSpec(N, th * math.pi, NEAREST_NEIGHBOR)
            res = solve(spec, SolverOptions(method="zt"))
            # the exact ground state is compared in the sector the solution occupies
            ex = exact_ground(spec, parity=fermion_parity(res.gamma))
            worst_E = max(worst_E, abs(res.energy - ex.energy) / abs(ex.energy))
            dS = half_chain_entropy(res.gamma) - exact_entropy(ex.state, range(N // 2))
            worst_S = max(worst_S, abs(dS))
    t = elapsed()
    ok = worst_E <= 1e-8 and worst_S <= 1e-8 and t < 120
    criterion(1, ok, f"max rel dE={worst_E:.2e} max dS={worst_S:.2e} time={t:.1f}s")
    assert ok


@pytest.mark.criterion(2)
def test_variational_bound(criterion):
    elapsed = _bench()
    thetas = np.linspace(0.0, math.pi / 2, 12)[1:-1]
    worst_gap, worst_rel, within_5pct, total = math.inf, 0.0, 0, 0
    for alpha in (0.3, 0.5, 1.0, 2.0, 3.0):
        for th in thetas:
            spec = ModelSpec(10, th, alpha)
            E = solve(spec).energy
            E_ex = exact_ground(spec).energy
            worst_gap = min(worst_gap, E - E_ex)
            rel = (E - E_ex) / abs(E_ex)
            worst_rel = max(worst_rel, rel)
            within_5pct += rel <= 0.05
            total += 1
    t = elapsed()
    ok = worst_gap >= -1e-9 and t < 600
    criterion(2, ok, f"min(E_GHF-E_ED)={worst_gap:.2e} over {total} points; "
                     f"within 5%: {within_5pct}/{total} (max {100 * worst_rel:.2f}%) time={t:.1f}s")
    assert ok


_PIPELINES = {}


def _theta_max(alpha):
    """theta_max results for one alpha, shared by criteria 3 and 4."""
    if alpha not in _PIPELINES:
        Ns = range(20, 101, 10) if FULL else range(20, 71, 10)
        results, _ = critical_point(alpha, Ns, SolverOptions(method="zt"), workers=WORKERS)
        _PIPELINES[alpha] = results
    return _PIPELINES[alpha]


@pytest.mark.slow
@pytest.mark.criterion(3)
def test_threshold_table(criterion):
    elapsed = _bench()
    n_max, tol = (100, 0.005) if FULL else (60, 0.01)
    parts, ok = [], True
    for alpha in (2.0, 3.0):
        results = _theta_max(alpha)
        rows = [(n, r.theta) for n, r in results.items() if r.converged and n <= n_max]
        fit = fit_threshold(rows)
        got = fit.params["theta_c"] / math.pi
        ref = REFERENCE_THRESHOLDS[alpha][0]
        ok &= abs(got - ref) <= tol
        parts.append(f"alpha={alpha:g}: {got:.4f}+-{fit.stderr['theta_c'] / math.pi:.4f} "
                     f"(ref {ref}, tol {tol}, N<={n_max}, {len(rows)} pts)")
    mode = "full" if FULL else "reduced"
    criterion(3, ok, f"[{mode}] " + "; ".join(parts) + f" time={elapsed():.0f}s")
    assert ok


@pytest.mark.slow
@pytest.mark.criterion(4)
def test_central_charge_at_criticality(criterion):
    results = _theta_max(3.0)
    rows = [(n, r.entropy) for n, r in results.items() if r.converged]
    fit = fit_central_charge(rows, exclude=(20, 30, 40))
    c = fit.params["c"]
    ok = c > 0.5
    # informational: the same fit at the extrapolated threshold instead of theta_max(N)
    theta_c = fit_threshold([(n, r.theta) for n, r in results.items() if r.converged])
    fixed = [(n, half_chain_entropy(solve(ModelSpec(n, theta_c.params["theta_c"], 3.0)).gamma))
             for n in fit.Ns]
    c_fixed = fit_central_charge(fixed, exclude=()).params["c"]
    mode = "full" if FULL else "reduced"
    criterion(4, ok, f"[{mode}] alpha=3 c={c:.3f}+-{fit.stderr['c']:.3f} at theta_max(N), "
                     f"N={list(fit.Ns)}; at fixed theta_c: c={c_fixed:.3f}")
    assert ok


def _median3(seq):
    out = list(seq)
    for k in range(1, len(seq) - 1):
        out[k] = float(np.median(seq[k - 1:k + 2]))
    return out


def _interior_maxima(seq):
    """Indices of interior local maxima; a flat run counts once, at its first index."""
    runs = []  # (first index, value) with consecutive ties collapsed
    for k, v in enumerate(seq):
        if not runs or v != runs[-1][1]:
            runs.append((k, v))
    return [runs[j][0] for j in range(1, len(runs) - 1)
            if runs[j - 1][1] < runs[j][1] > runs[j + 1][1]]


@pytest.mark.slow
@pytest.mark.criterion(5)
def test_area_law_violation(criterion):
    elapsed = _bench()
    thetas = np.linspace(0.0, math.pi / 4, 52)[1:-1]
    fits, points = effective_charge_sweep(0.3, thetas, range(40, 101, 10),
                                          SolverOptions(method="ite", restarts=1, dtau=0.2),
                                          workers=WORKERS)
    c = [f.params["c"] for _, f in fits]
    smooth = _median3(c)
    interior_max = _interior_maxima(smooth)
    k_top = int(np.argmax(smooth))  # argmax also returns the first index of a tie
    ok = (abs(c[0]) < 0.02 and len(interior_max) == 1 and interior_max[0] == k_top
          and all(p.converged for p in points))
    criterion(5, ok, f"c(theta={thetas[0] / math.pi:.4f}pi)={c[0]:.4f} (bound 0.02); "
                     f"interior maxima at theta/pi={[round(float(thetas[k] / math.pi), 4) for k in interior_max]} "
                     f"(c={smooth[k_top]:.4f}); c at last point {c[-1]:.4f}; "
                     f"{sum(not p.converged for p in points)} unconverged; time={elapsed():.0f}s")
    assert ok


@pytest.mark.criterion(6)
def test_ite_monotonicity(criterion):
    elapsed = _bench()
    worst_rise, worst_purity, halvings, runs = -math.inf, 0.0, 0, 0
    bad_log = 0
    for seed, alpha, th in itertools.product(range(20), (0.5, 2.0, NEAREST_NEIGHBOR), (0.1, 0.3)):
        c = build_couplings(ModelSpec(6, th * math.pi, alpha))
        purity = []
        run = run_from(random_pure_covariance(6, seed), c,
                       SolverOptions(method="ite", record_trace=True),
                       monitor=lambda it, g, E: purity.append(purity_error(g)))
        worst_rise = max(worst_rise, float(np.max(np.diff(run.trace), initial=-math.inf)))
        worst_purity = max(worst_purity, max(purity))
        dts = [dt for _, dt in run.halvings]
        bad_log += any(b != a / 2 for a, b in zip([0.05] + dts, dts))
        halvings += len(run.halvings)
        runs += 1
    t = elapsed()
    ok = worst_rise <= 1e-12 and worst_purity <= 1e-8 and bad_log == 0 and t < 300
    criterion(6, ok, f"{runs} runs, max dE={worst_rise:.2e}, max purity err={worst_purity:.2e}, "
                     f"{halvings} halvings logged, time={t:.1f}s")
    assert ok


@pytest.mark.criterion(7)
def test_gradient_correctness(criterion):
    elapsed = _bench()
    eps, worst = 1e-6, 0.0
    for k, alpha in enumerate((0.5, 1.0, 2.0)):
        c = build_couplings(ModelSpec(6, 0.3 * math.pi, alpha))
        g = random_pure_covariance(6, 100 + k).gamma
        H = mean_field(g, c)
        for l, m in itertools.combinations(range(12), 2):
            # one independent entry; the energy sees half of it in each of (l,m), (m,l)
            d = np.zeros_like(g)
            d[l, m] = eps
            fd = (energy(g + d, c) - energy(g - d, c)) / (2 * eps)
            worst = max(worst, abs(H[l, m] - 4 * fd))
    t = elapsed()
    ok = worst <= 1e-6 and t < 60
    criterion(7, ok, f"max |H - 4 dE/dGamma|={worst:.2e} time={t:.1f}s")
    assert ok


@pytest.mark.criterion(8)
def test_fixed_point_equivalence(criterion):
    # one ITE step moves a state with residual r by about dtau * r, so a 1e-9
    # bound at dtau = 0.05 needs the ZT fixed point resolved well below the
    # default grad_tol; the default-tolerance figure is reported alongside
    worst = worst_default = 0.0
    states, unconverged = 0, 0
    for alpha, th in itertools.product((0.5, 1.0, 2.0, 3.0, NEAREST_NEIGHBOR), (0.1, 0.25, 0.4)):
        c = build_couplings(ModelSpec(8, th * math.pi, alpha))
        for seed in range(4):
            init = random_pure_covariance(8, seed, parity=(-1) ** seed)
            for tol in (1e-9, 1e-7):
                run = run_from(init, c, SolverOptions(method="zt", grad_tol=tol))
                if not run.converged:
                    unconverged += 1
                    continue
                dev = float(np.max(np.abs(ite_step(run.gamma, c, 0.05).gamma - run.gamma)))
                if tol == 1e-9:
                    states += 1
                    worst = max(worst, dev)
                else:
                    worst_default = max(worst_default, dev)
    ok = states > 0 and worst <= 1e-9
    criterion(8, ok, f"{states} ZT fixed points (grad_tol 1e-9): max |ite_step(G)-G|={worst:.2e}; "
                     f"at default grad_tol 1e-7: {worst_default:.2e}; {unconverged} runs unconverged")
    assert ok


@pytest.mark.criterion(9)
def test_kernel_properties(criterion):
    elapsed = _bench()
    rng = np.random.default_rng(9)
    det_err = conj_err = block_err = 0.0
    for n in range(2, 21, 2):
        for _ in range(10):
            a = rng.standard_normal((n, n))
            A = a - a.T
            pf, det = pfaffian(A), np.linalg.det(A)
            det_err = max(det_err, abs(pf * pf - det) / max(1.0, abs(det)))
            q, _ = np.linalg.qr(rng.standard_normal((n, n)))
            lhs = pfaffian(q @ A @ q.T)
            conj_err = max(conj_err, abs(lhs - np.linalg.det(q) * pf) / max(1.0, abs(pf)))
            m = 2 * rng.integers(1, 6)
            b = rng.standard_normal((m, m))
            B = b - b.T
            AB = np.block([[A, np.zeros((n, m))], [np.zeros((m, n)), B]])
            ref = pf * pfaffian(B)
            block_err = max(block_err, abs(pfaffian(AB) - ref) / max(1.0, abs(ref)))
    wick_err = 0.0
    for N in (2, 4, 6):
        for seed in range(3):
            g = random_pure_covariance(N, seed)
            psi = gaussian_state_vector(g)
            for size in (2, 4, 6):
                for idx in itertools.combinations(range(2 * N), size):
                    if size == 6 and idx[0] % 3:
                        continue  # a deterministic third of the 6-point strings
                    wick_err = max(wick_err, abs(exact_correlator(psi, idx)
                                                 - wick_expectation(g, idx)))
    t = elapsed()
    ok = max(det_err, conj_err, block_err) <= 1e-10 and wick_err <= 1e-9 and t < 60
    criterion(9, ok, f"Pf^2=det {det_err:.1e}, conj {conj_err:.1e}, block {block_err:.1e}, "
                     f"Wick {wick_err:.1e}, time={t:.1f}s")
    assert ok
