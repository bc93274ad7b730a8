import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scarlab.errors import DomainError
from scarlab.haar import (
    HaarSampler,
    check_first_moment,
    check_second_moment,
    check_typicality_scaling,
    gram_matrix,
    monte_carlo,
    random_hermitian,
    random_unit_vector,
    sample_haar,
    second_moment_prediction,
    typicality_prediction,
    weingarten_matrix,
)


@given(st.integers(2, 9), st.integers(0, 2 ** 63 - 1))
@settings(max_examples=25, deadline=None)
def test_samples_are_unitary(d, seed):
    U = sample_haar(HaarSampler(d, seed))
    assert np.abs(U.conj().T @ U - np.eye(d)).max() <= 1e-12
    np.testing.assert_allclose(np.linalg.norm(U, axis=0), 1.0, atol=1e-12)


def test_seeded_stream_is_reproducible():
    a, b = HaarSampler(5, 42).draw(3), HaarSampler(5, 42).draw(3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, HaarSampler(5, 43).draw(3))


def test_small_dimension_rejected():
    with pytest.raises(DomainError):
        HaarSampler(1, 0)


def test_first_moment_of_single_entry():
    sampler = HaarSampler(4, 7)
    mean, se = monte_carlo(sampler, 10_000, lambda U: np.abs(U[:, 0, 0]) ** 2)
    assert abs(mean[0] - 0.25) <= 3 * se[0]


def test_first_moment_identity_is_exact():
    r = check_first_moment(5, 50, np.eye(5))
    for e in r.entries:
        assert e.deviation <= 1e-13
    assert r.passed()


def test_first_moment_traceless_and_random():
    X = np.diag([1.0, -1.0, 0.0, 0.0])
    r = check_first_moment(4, 2_000, X, seed=1)
    assert all(e.prediction == 0 for e in r.entries)
    Y = np.random.default_rng(2).standard_normal((6, 6))
    r = check_first_moment(6, 20_000, Y, seed=3)
    assert r.passed(4.0), r.worst_sigmas()


def test_weingarten_algebra_is_exact():
    for d in range(2, 10):
        Q, C = gram_matrix(d), weingarten_matrix(d)
        assert Q == [[d * d, d], [d, d * d]]
        prod = [[sum(Q[i][k] * C[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
        assert prod == [[1, 0], [0, 1]]
        assert all(isinstance(x, Fraction) for row in C for x in row)
    assert second_moment_prediction(2, (0, 0), (0, 0), (0, 0), (0, 0)) == Fraction(1, 3)


@pytest.mark.parametrize("d", [2, 3, 5, 8])
def test_closed_forms(d):
    p = lambda *idx: second_moment_prediction(d, *idx)  # noqa: E731
    assert p((0, 0), (0, 0), (0, 0), (0, 0)) == Fraction(2, d * (d + 1))
    assert p((0, 1), (0, 1), (0, 1), (0, 1)) == Fraction(1, d * d - 1)
    assert p((0, 0), (0, 1), (0, 0), (0, 1)) == Fraction(1, d * (d + 1))
    assert p((0, 1), (0, 1), (0, 1), (1, 0)) == Fraction(-1, d * (d * d - 1))
    assert p((0, 0), (0, 0), (0, 0), (0, 1)) == 0


@pytest.mark.parametrize("d", [2, 8])
def test_second_moment_monte_carlo(d):
    r = check_second_moment(d, 40_000, seed=d)
    assert all(r.exact_checks.values())
    assert r.passed(4.0), r.worst_sigmas()


def test_typicality_identity_prediction():
    rng = np.random.default_rng(0)
    a, b = random_unit_vector(6, rng), random_unit_vector(6, rng)
    r = check_typicality_scaling(6, 2_000, np.eye(6), a, b, 1)
    assert r.entries[0].prediction == pytest.approx(np.vdot(a, b) / 6)
    assert r.passed(4.0)


@pytest.mark.parametrize("q,n", [(1, 10_000), (2, 50_000)])
def test_typicality_monte_carlo(q, n):
    rng = np.random.default_rng(9)
    O = random_hermitian(8, rng)
    a, b = random_unit_vector(8, rng), random_unit_vector(8, rng)
    r = check_typicality_scaling(8, n, O, a, b, q, seed=q)
    assert r.passed(4.0), r.worst_sigmas()


def test_typicality_prediction_from_weingarten_sum():
    # expand <a|O|u1><u1|O|u2><u2|O|b> in entries of U and average each
    # monomial U_x0 U_z1 conj(U_y0) conj(U_w1) with the degree-2 formula
    rng = np.random.default_rng(4)
    d = 4
    O = random_hermitian(d, rng)
    a, b = random_unit_vector(d, rng), random_unit_vector(d, rng)
    left, right = np.conj(a) @ O, O @ b
    total = 0j
    for x, y, z, w in itertools.product(range(d), repeat=4):
        weight = second_moment_prediction(d, (x, z), (0, 1), (y, w), (0, 1))
        if weight:
            total += left[x] * O[y, z] * right[w] * float(weight)
    assert total == pytest.approx(typicality_prediction(O, a, b, 2), abs=1e-14)
    one = sum(left[x] * right[x] for x in range(d)) / d
    assert one == pytest.approx(typicality_prediction(O, a, b, 1), abs=1e-14)


def test_left_invariance():
    d, n = 4, 20_000
    W = sample_haar(HaarSampler(d, 99))

    def stat(U):
        return np.abs(U[:, 0, 0]) ** 4

    plain = monte_carlo(HaarSampler(d, 1), n, stat)
    rotated = monte_carlo(HaarSampler(d, 2), n, lambda U: stat(W[None] @ U))
    diff = abs(plain[0][0] - rotated[0][0])
    assert diff <= 4 * np.hypot(plain[1][0], rotated[1][0])


def test_standard_error_scaling():
    stat = lambda U: np.abs(U[:, 0, 1]) ** 2  # noqa: E731
    _, se1 = monte_carlo(HaarSampler(6, 5), 20_000, stat)
    _, se2 = monte_carlo(HaarSampler(6, 6), 40_000, stat)
    assert se1[0] / se2[0] == pytest.approx(np.sqrt(2), rel=0.1)
    assert se1[0] > 0


def test_report_schema():
    r = check_second_moment(3, 500)
    data = r.to_dict()
    assert set(data) == {"d", "n_samples", "entries"}
    assert set(data["entries"][0]) == {"label", "estimate_re", "estimate_im", "prediction_re",
                                       "prediction_im", "std_error", "sigmas"}


def test_bad_inputs():
    with pytest.raises(DomainError):
        check_typicality_scaling(4, 10, np.eye(4), np.ones(4), np.ones(4), 3)
    with pytest.raises(DomainError):
        check_first_moment(4, 10, np.eye(3))
    with pytest.raises(DomainError):
        monte_carlo(HaarSampler(2, 0), 1, lambda U: U[:, 0, 0])
