import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgs_tfim.gaussian import block_omega, random_pure_covariance
from fgs_tfim.observables import (
    Subsystem,
    entanglement_entropy,
    entanglement_spectrum,
    half_chain_entropy,
)
from fgs_tfim.oracle import exact_entropy, gaussian_state_vector


def test_subsystem_majoranas():
    assert list(Subsystem((2, 0)).majoranas) == [0, 1, 4, 5]
    assert Subsystem.left_half(6).sites == (0, 1, 2)
    assert Subsystem((0, 3)).complement(5).sites == (1, 2, 4)


def test_subsystem_validation():
    with pytest.raises(ValueError):
        Subsystem((1, 1))
    with pytest.raises(ValueError):
        Subsystem((-1,))
    with pytest.raises(ValueError):
        entanglement_entropy(block_omega(np.ones(2)), Subsystem((2,)))


def test_product_state_has_no_entropy():
    g = block_omega(np.array([1.0, -1.0, 1.0, 1.0]))
    for sites in [(0,), (0, 1), (1, 3)]:
        assert entanglement_entropy(g, Subsystem(sites)) == 0.0


def test_maximally_mixed_pair():
    # Majoranas 1 and 2 paired across the cut: each side is maximally mixed
    g = np.zeros((4, 4))
    g[0, 3], g[3, 0] = 1.0, -1.0
    g[1, 2], g[2, 1] = 1.0, -1.0
    assert np.allclose(entanglement_spectrum(g, Subsystem((0,))), 0.0)
    assert entanglement_entropy(g, Subsystem((0,))) == pytest.approx(math.log(2))


@settings(max_examples=25, deadline=None)
@given(N=st.integers(2, 10), seed=st.integers(0, 2**32 - 1), data=st.data())
def test_complement_and_bounds(N, seed, data):
    g = random_pure_covariance(N, seed)
    sites = data.draw(st.sets(st.integers(0, N - 1), min_size=1, max_size=N - 1))
    part = Subsystem(tuple(sites))
    S = entanglement_entropy(g, part)
    assert S == pytest.approx(entanglement_entropy(g, part.complement(N)), abs=1e-9)
    assert 0.0 <= S <= len(sites) * math.log(2) + 1e-12
    nu = entanglement_spectrum(g, part)
    assert np.allclose(np.sort(nu), np.sort(-nu), atol=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_matches_exact_reduced_state(seed):
    g = random_pure_covariance(6, seed)
    psi = gaussian_state_vector(g)
    for sites in [(0, 1, 2), (1,), (2, 3, 4), (0, 1, 5)]:
        assert entanglement_entropy(g, Subsystem(sites)) == pytest.approx(
            exact_entropy(psi, sites), abs=1e-9
        )


def test_contiguity_flag():
    assert Subsystem((2, 3, 4)).contiguous
    assert not Subsystem((0, 4)).contiguous


def test_guard_band():
    g = block_omega(np.ones(2))
    inside = g * (1 + 5e-9)
    assert entanglement_entropy(inside, Subsystem((0,))) == 0.0
    with pytest.raises(ValueError):
        entanglement_entropy(g * (1 + 1e-6), Subsystem((0,)))


def test_half_chain_helper():
    g = random_pure_covariance(6, 1)
    assert half_chain_entropy(g) == entanglement_entropy(g, Subsystem((0, 1, 2)))
