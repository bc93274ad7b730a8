import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import _refl, _rot, brute_basis, group_projector, orbits
from scarlab.basis import enumerate_basis
from scarlab.errors import DomainError
from scarlab.sector import (
    SectorVector,
    build_sector,
    lift,
    lift_matrix,
    neel_representative,
    project,
)

# orbit counts under translations + reflection, frozen from the oracle below
SECTOR_DIMS = {4: 3, 8: 8, 10: 14, 12: 26, 14: 49, 16: 99, 18: 209}


@pytest.mark.parametrize("n", [4, 6, 8, 10, 12])
def test_dimension_equals_projector_rank(n):
    P = group_projector(n)
    rank = int(round(np.trace(P)))
    assert np.linalg.matrix_rank(P) == rank
    assert build_sector(enumerate_basis(n)).dim_sector == rank == len(orbits(n))


@pytest.mark.parametrize("n,dim", sorted(SECTOR_DIMS.items()))
def test_frozen_dimensions(n, dim):
    assert build_sector(enumerate_basis(n)).dim_sector == dim


@pytest.mark.parametrize("n", [4, 7, 10])
def test_representatives_are_orbit_minima(n):
    s = build_sector(enumerate_basis(n))
    obs = orbits(n)
    assert list(s.representatives) == [o[0] for o in obs]
    assert list(s.orbit_sizes) == [len(o) for o in obs]


@given(st.integers(4, 14), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_lift_is_symmetric_and_isometric(n, seed):
    s = build_sector(enumerate_basis(n))
    amps = np.random.default_rng(seed).standard_normal(s.dim_sector)
    full = lift(SectorVector(s, amps))
    assert np.isclose(np.linalg.norm(full), np.linalg.norm(amps), atol=1e-12)
    configs = list(s.parent.configs)
    value = dict(zip(configs, full))
    for c in configs[:: max(1, len(configs) // 20)]:
        assert np.isclose(value[_rot(c, n)], value[c])
        assert np.isclose(value[_refl(c, n)], value[c])
    np.testing.assert_allclose(project(s, full).amplitudes, amps, atol=1e-12)


def test_lifted_states_span_projector_range():
    n = 8
    s = build_sector(enumerate_basis(n))
    W = lift_matrix(s, np.eye(s.dim_sector))
    np.testing.assert_allclose(W.T @ W, np.eye(s.dim_sector), atol=1e-12)
    np.testing.assert_allclose(W @ W.T, group_projector(n), atol=1e-12)


def test_neel_representative():
    s = build_sector(enumerate_basis(8))
    assert s.representatives[neel_representative(s)] == 0b01010101
    with pytest.raises(DomainError, match="no Néel state"):
        neel_representative(build_sector(enumerate_basis(7)))


def test_length_mismatch():
    s = build_sector(enumerate_basis(6))
    with pytest.raises(DomainError):
        SectorVector(s, np.zeros(s.dim_sector + 1))
    with pytest.raises(DomainError):
        project(s, np.zeros(3))


def test_representative_lookup():
    s = build_sector(enumerate_basis(6))
    assert s.representative_of(0b100000) == 1
    with pytest.raises(KeyError):
        s.index_of_representative(0b100000)
    assert len(brute_basis(6)) == s.parent.dim
