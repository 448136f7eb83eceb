import itertools
import math

import numpy as np
import pytest

from fgs_tfim.gaussian import (
    CovarianceMatrix,
    block_omega,
    energy,
    energy_and_mean_field,
    fermion_parity,
    mean_field,
    purify,
    purity_error,
    random_pure_covariance,
    read_checkpoint,
    read_checkpoint_csv,
    wick_expectation,
    write_checkpoint,
    write_checkpoint_csv,
)
from fgs_tfim.model import ModelSpec, build_couplings
from fgs_tfim.oracle import SpinHamiltonian, exact_correlator, exact_ground, gaussian_state_vector
from fgs_tfim.pfaffian import pfaffian


def fd_mean_field(g, c, eps=1e-6):
    n = g.shape[0]
    out = np.zeros_like(g)
    for l, m in itertools.combinations(range(n), 2):
        d = np.zeros_like(g)
        d[l, m], d[m, l] = eps, -eps
        # moving the pair (l, m), (m, l) together doubles the single-entry slope
        slope = (energy(g + d, c) - energy(g - d, c)) / (2 * eps)
        out[l, m] = 4 * slope / 2
        out[m, l] = -out[l, m]
    return out


def test_random_state_test_hook():
    g = random_pure_covariance(3, seed=1, haar=False, random_signs=False)
    assert np.array_equal(g.gamma, block_omega(np.ones(3)))


@pytest.mark.parametrize("N", [1, 2, 5, 12])
def test_random_state_is_pure(N):
    g = random_pure_covariance(N, seed=N)
    assert purity_error(g) <= 1e-12
    assert np.array_equal(g.gamma, -g.gamma.T)


def test_random_state_deterministic():
    a = random_pure_covariance(6, seed=42).gamma
    b = random_pure_covariance(6, seed=42).gamma
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("parity", [1, -1])
def test_random_state_parity_control(parity):
    for seed in range(6):
        g = random_pure_covariance(5, seed, parity=parity)
        assert fermion_parity(g) == parity
        assert purity_error(g) <= 1e-12


def test_random_state_rejects_empty():
    with pytest.raises(ValueError):
        random_pure_covariance(0)


def test_covariance_is_immutable():
    g = random_pure_covariance(2, 0)
    with pytest.raises(ValueError):
        g.gamma[0, 1] = 3.0


def test_purify_restores_purity():
    g = random_pure_covariance(4, 3).gamma
    noisy = g + 1e-4 * (lambda a: a - a.T)(np.random.default_rng(0).standard_normal(g.shape))
    assert purity_error(purify(noisy)) < 1e-12
    assert np.max(np.abs(purify(noisy) - g)) < 1e-3


def test_wick_pair():
    g = block_omega(np.ones(2))
    assert wick_expectation(g, [0, 1]) == pytest.approx(-1j)


def test_wick_quartic_on_omega():
    g = block_omega(np.ones(2))
    assert wick_expectation(g, [0, 1, 2, 3]) == pytest.approx(-1.0)


def test_wick_rejects_duplicates_and_odd():
    g = block_omega(np.ones(2))
    with pytest.raises(ValueError):
        wick_expectation(g, [0, 0])
    with pytest.raises(ValueError):
        wick_expectation(g, [0, 1, 2])


@pytest.mark.parametrize("seed", range(3))
def test_wick_matches_exact_correlators(seed):
    g = random_pure_covariance(4, seed)
    psi = gaussian_state_vector(g)
    for k in (2, 4, 6):
        for idx in itertools.combinations(range(8), k):
            assert exact_correlator(psi, idx) == pytest.approx(wick_expectation(g, idx), abs=1e-9)


def test_field_only_energy():
    c = build_couplings(ModelSpec(5, 0.0, 1.0))
    assert energy(block_omega(np.ones(5)), c) == pytest.approx(-5.0)


def test_two_spin_interaction_energy():
    c = build_couplings(ModelSpec(2, math.pi / 2, 1.0))
    g = random_pure_covariance(2, 7).gamma
    assert energy(g, c) == pytest.approx(-g[1, 2])


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0, "inf"])
def test_energy_matches_pair_pfaffians(alpha):
    N = 6
    c = build_couplings(ModelSpec(N, 0.3 * math.pi, alpha))
    g = random_pure_covariance(N, 11).gamma
    E = -sum(c.h[p] * g[2 * p, 2 * p + 1] for p in range(N))
    for p, q in itertools.combinations(range(N), 2):
        sub = g[2 * p + 1: 2 * q + 1, 2 * p + 1: 2 * q + 1]
        E += c.J[p, q] * (-1) ** (q - p) * pfaffian(sub)
    assert energy(g, c) == pytest.approx(E, abs=1e-12)


def test_energy_is_the_spin_expectation():
    # the energy functional is <H> on the corresponding spin state
    spec = ModelSpec(5, 0.27 * math.pi, 0.8)
    g = random_pure_covariance(5, 4)
    psi = gaussian_state_vector(g).amplitudes
    H = SpinHamiltonian(spec)
    assert energy(g, build_couplings(spec)) == pytest.approx(np.vdot(psi, H.matvec(psi)).real, abs=1e-12)


def test_energy_matches_wick_strings():
    N = 5
    c = build_couplings(ModelSpec(N, 0.3, 1.3))
    g = random_pure_covariance(N, 2)
    for p, q in itertools.combinations(range(N), 2):
        idx = list(range(2 * p + 1, 2 * q + 1))
        m = len(idx) // 2
        # X_p X_q = (-i)^(q-p) a_{2p+1} ... a_{2q}
        via_wick = ((-1j) ** (q - p) * wick_expectation(g, idx)).real
        via_pf = (-1) ** (q - p) * pfaffian(g.gamma[np.ix_(idx, idx)])
        assert via_wick == pytest.approx(via_pf, abs=1e-12)
        assert m == q - p


def test_energy_bitwise_stable():
    c = build_couplings(ModelSpec(8, 0.3, 1.0))
    g = random_pure_covariance(8, 1)
    assert energy(g, c) == energy(g, c)


def test_dimension_mismatch():
    c = build_couplings(ModelSpec(3, 0.3, 1.0))
    with pytest.raises(ValueError):
        energy(random_pure_covariance(4, 0), c)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_mean_field_finite_differences(alpha):
    c = build_couplings(ModelSpec(6, 0.3 * math.pi, alpha))
    g = random_pure_covariance(6, 5).gamma
    assert np.max(np.abs(mean_field(g, c) - fd_mean_field(g, c))) < 1e-6


def test_mean_field_field_only():
    c = build_couplings(ModelSpec(4, 0.0, 1.0))
    H = mean_field(random_pure_covariance(4, 1), c)
    expect = -2.0 * block_omega(np.ones(4))
    assert np.allclose(H, expect)


def test_mean_field_nearest_neighbor_is_state_independent():
    c = build_couplings(ModelSpec(6, 0.4, "inf"))
    H1 = mean_field(random_pure_covariance(6, 1), c)
    H2 = mean_field(random_pure_covariance(6, 2), c)
    assert np.allclose(H1, H2)
    assert np.array_equal(H1, -H1.T)


def test_energy_and_mean_field_share_energy():
    c = build_couplings(ModelSpec(7, 0.35, 1.7))
    g = random_pure_covariance(7, 3)
    E, H = energy_and_mean_field(g, c)
    assert E == energy(g, c)


def test_fermion_parity_sign_convention():
    # all blocks +1 is the all-down product state, <prod Z> = (-1)^N
    for N in (2, 3):
        g = block_omega(np.ones(N))
        assert fermion_parity(g) == (-1) ** N
        ex = exact_ground(ModelSpec(N, 0.0, 1.0))
        assert ex.parity == (-1) ** N


@pytest.mark.parametrize("writer,reader", [(write_checkpoint, read_checkpoint),
                                           (write_checkpoint_csv, read_checkpoint_csv)])
def test_checkpoint_round_trip(tmp_path, writer, reader):
    g = random_pure_covariance(5, 9)
    path = tmp_path / "gamma.bin"
    writer(path, g)
    back = reader(path)
    assert isinstance(back, CovarianceMatrix)
    assert np.array_equal(back.gamma, g.gamma)


def test_checkpoint_layout(tmp_path):
    g = random_pure_covariance(2, 0)
    path = tmp_path / "g.fgs"
    write_checkpoint(path, g)
    data = path.read_bytes()
    assert data[:4] == b"FGS1"
    assert int.from_bytes(data[4:8], "little") == 2
    vals = np.frombuffer(data[8:], dtype="<f8")
    assert vals.size == 6
    assert vals[0] == g.gamma[0, 1] and vals[-1] == g.gamma[2, 3]


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(b"NOPE" + bytes(8))
    with pytest.raises(ValueError):
        read_checkpoint(path)
    path.write_bytes(b"FGS1" + (3).to_bytes(4, "little") + bytes(8))
    with pytest.raises(ValueError):
        read_checkpoint(path)
