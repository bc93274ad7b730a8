import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import admissible, brute_basis, lucas
from scarlab.basis import enumerate_basis, neighbors_down, popcount, reflect, rotate_left
from scarlab.errors import DomainError


@pytest.mark.parametrize("n", range(3, 15))
def test_matches_bruteforce_filter(n):
    assert list(enumerate_basis(n).configs) == brute_basis(n)


def test_small_examples():
    b3 = enumerate_basis(3)
    assert b3.dim == 4 and b3.configs[0] == 0 and b3.index_of[0] == 0
    assert enumerate_basis(4).dim == 7
    assert enumerate_basis(8).dim == 47


@given(st.integers(3, 24))
@settings(max_examples=25, deadline=None)
def test_dimension_is_lucas_number(n):
    assert enumerate_basis(n).dim == lucas(n)


@given(st.integers(3, 18), st.data())
@settings(max_examples=40, deadline=None)
def test_closed_under_translation_and_reflection(n, data):
    basis = enumerate_basis(n)
    c = data.draw(st.sampled_from(list(basis.configs)))
    assert admissible(c, n)
    assert int(rotate_left(c, n)) in basis
    assert int(reflect(c, n)) in basis


def test_sorted_and_indexed():
    b = enumerate_basis(12)
    assert np.all(np.diff(b.configs) > 0)
    assert all(b.index_of[int(c)] == k for k, c in enumerate(b.configs))
    np.testing.assert_array_equal(b.indices_of(b.configs[::3]), np.arange(0, b.dim, 3))
    with pytest.raises(KeyError):
        b.indices_of([0b11])


def test_short_chain_rejected():
    with pytest.raises(DomainError, match="chain too short for periodic blockade"):
        enumerate_basis(2)


def test_neighbors_down():
    b = enumerate_basis(6)
    assert neighbors_down(b, 0, 3)
    assert not neighbors_down(b, 0b000100, 3)   # site 2 up
    assert not neighbors_down(b, 0b100000, 0)   # site 5 wraps onto site 0
    with pytest.raises(IndexError):
        neighbors_down(b, 0, 6)
    with pytest.raises(DomainError):
        neighbors_down(b, 0b11, 4)


@given(st.integers(0, 2 ** 20 - 1))
def test_popcount(c):
    assert int(popcount(c)) == bin(c).count("1")
