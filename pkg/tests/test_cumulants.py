import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    brute_crossing,
    brute_scar_free_cumulant,
    brute_thermal_free_cumulant,
    canonical_weights,
    propagator_threepoint,
)
from scarlab.cumulants import (
    CumulantSeries,
    canonical_ensemble,
    crossing_term,
    energy_density,
    factorization_test,
    make_ensemble,
    make_pair,
    microcanonical_ensemble,
    scar_correlator,
    scar_free_cumulant,
    solve_beta,
    thermal_correlator,
    thermal_free_cumulant,
    time_pattern,
    uniform_grid,
)
from scarlab.errors import DomainError
from scarlab.scars import central_scar, select_scars
from scarlab.sector import lift_matrix
from scarlab.spectral import build_hamiltonian, observable_diagonal, observable_in_eigenbasis


@pytest.fixture(scope="module")
def n8(pxp):
    s, spec, obs = pxp(8)
    scars = select_scars(spec, s, count=4, band_fraction=0.8)
    return s, spec, obs, scars


RNG_TIMES = np.random.default_rng(11).normal(scale=3.0, size=(4, 4))


# --------------------------------------------------------------- beta solver

def test_beta_zero_at_zero_density(pxp):
    _, spec, _ = pxp(12)
    assert abs(solve_beta(spec, 0.0)) <= 1e-10


def test_beta_sign(pxp):
    _, spec, _ = pxp(12)
    assert solve_beta(spec, -0.01) > 0
    assert solve_beta(spec, 0.01) < 0


@given(st.floats(-0.9, 0.9))
@settings(max_examples=20, deadline=None)
def test_beta_meets_residual(x):
    from conftest import _solved
    _, spec, _ = _solved(10)
    target = x * spec.energies[-1] / 10
    beta = solve_beta(spec, target)
    assert abs(energy_density(spec, beta, 10) - target) <= 1e-10


def test_beta_against_dense_scan(pxp):
    s, spec, _ = pxp(12)
    sc = select_scars(spec, s, count=4)
    a, b = sc.scar_indices[1], sc.scar_indices[2]
    target = (spec.energies[a] + spec.energies[b]) / 24
    grid = np.linspace(-2, 2, 40001)
    dens = np.array([np.dot(canonical_weights(spec.energies, g), spec.energies) / 12 for g in grid])
    scan = grid[np.argmin(np.abs(dens - target))]
    assert solve_beta(spec, target) == pytest.approx(scan, abs=2e-4)


def test_beta_unreachable(pxp):
    _, spec, _ = pxp(8)
    with pytest.raises(DomainError, match="unreachable energy density"):
        solve_beta(spec, spec.energies[-1] / 8)


# ----------------------------------------------------------------- ensembles

def test_ensembles(pxp):
    _, spec, _ = pxp(10)
    ens = canonical_ensemble(spec, 0.3)
    np.testing.assert_allclose(ens.weights, canonical_weights(spec.energies, 0.3), atol=1e-15)
    assert ens.Z == pytest.approx(np.exp(-0.3 * spec.energies).sum())
    mc = microcanonical_ensemble(spec, 0.0, 2.0)
    assert mc.Z == np.count_nonzero(np.abs(spec.energies) <= 1.0)
    with pytest.raises(DomainError):
        microcanonical_ensemble(spec, 100.0, 0.1)
    with pytest.raises(DomainError):
        make_ensemble(spec, 0.0, "grand")


# ----------------------------------------------------------- thermal side

def test_thermal_correlator_examples(n8):
    _, spec, obs, _ = n8
    O, E = obs.matrix, spec.energies
    ens = canonical_ensemble(spec, 0.4)
    p = ens.weights
    assert thermal_correlator(ens, obs, np.zeros((1, 0)), 1).values[0] == pytest.approx(p @ np.diagonal(O))
    two = thermal_correlator(ens, obs, [[0.0]], 2).values[0]
    assert two == pytest.approx(np.trace(np.diag(p) @ O @ O))
    inf = canonical_ensemble(spec, 0.0)
    t = 1.7
    direct = sum(abs(O[i, j]) ** 2 * np.exp(1j * (E[i] - E[j]) * t)
                 for i in range(spec.dim) for j in range(spec.dim)) / spec.dim
    assert thermal_correlator(inf, obs, [[t]], 2).values[0] == pytest.approx(direct, abs=1e-14)
    three = thermal_correlator(ens, obs, [[0.0, 0.0]], 3).values[0]
    assert three == pytest.approx(np.trace(np.diag(p) @ O @ O @ O), abs=1e-14)


def test_thermal_three_point_against_loops(n8):
    _, spec, obs, _ = n8
    O, E = obs.matrix, spec.energies
    ens = canonical_ensemble(spec, -0.2)
    t1, t2 = 0.7, -1.9
    M1 = np.exp(1j * E * t1)[:, None] * O * np.exp(-1j * E * t1)[None, :]
    M2 = np.exp(1j * E * t2)[:, None] * O * np.exp(-1j * E * t2)[None, :]
    ref = np.trace(np.diag(ens.weights) @ M1 @ M2 @ O)
    assert thermal_correlator(ens, obs, [[t1, t2]], 3).values[0] == pytest.approx(ref, abs=1e-14)
    with pytest.raises(DomainError):
        thermal_correlator(ens, obs, [[0.0]], 4)


def test_thermal_free_cumulants_against_loops(n8):
    _, spec, obs, scars = n8
    O, E = obs.matrix, spec.energies
    ens = canonical_ensemble(spec, 0.25)
    T = scars.non_scar_indices
    k1 = thermal_free_cumulant(ens, obs, T, np.zeros((1, 0)), 1).values[0]
    assert abs(k1 - brute_thermal_free_cumulant(O, E, ens.weights, T)) <= 1e-12
    for t in (0.0, 0.9, -3.3):
        k2 = thermal_free_cumulant(ens, obs, T, [[t]], 2).values[0]
        assert abs(k2 - brute_thermal_free_cumulant(O, E, ens.weights, T, t)) <= 1e-12


def test_thermal_free_cumulant_identities(n8):
    _, spec, obs, scars = n8
    O = obs.matrix
    inf = canonical_ensemble(spec, 0.0)
    allT = np.arange(spec.dim)
    k1 = thermal_free_cumulant(inf, obs, allT, np.zeros((1, 0)), 1).values[0]
    assert k1 == pytest.approx(np.trace(O) / spec.dim, abs=1e-15)
    ens = canonical_ensemble(spec, 0.5)
    T = scars.thermal_indices
    p = ens.weights
    k2 = thermal_free_cumulant(ens, obs, T, [[0.0]], 2).values[0]
    ref = sum(p[i] * O[i, j] * O[j, i] for i in T for j in T) - sum(p[i] * O[i, i] ** 2 for i in T)
    assert k2 == pytest.approx(ref, abs=1e-14)
    with pytest.raises(DomainError):
        thermal_free_cumulant(ens, obs, T, [[0.0, 1.0]], 3)


# -------------------------------------------------------------- scar side

@pytest.mark.parametrize("q", [2, 3, 4])
def test_scar_free_cumulant_against_loops(n8, q):
    _, spec, obs, scars = n8
    T = scars.non_scar_indices
    for a, b in [(scars.scar_indices[0], scars.scar_indices[0]),
                 (scars.scar_indices[1], scars.scar_indices[2])]:
        got = scar_free_cumulant(spec, obs, T, a, b, RNG_TIMES[:, :q], q).values
        ref = [brute_scar_free_cumulant(obs.matrix, spec.energies, T, a, b, tv) for tv in RNG_TIMES[:, :q]]
        assert np.abs(got - ref).max() <= 1e-12


def test_scar_free_cumulant_examples(n8):
    _, spec, obs, scars = n8
    O = obs.matrix
    a, b = scars.scar_indices[1], scars.scar_indices[2]
    assert scar_free_cumulant(spec, obs, scars.thermal_indices, a, b, [[0.0]], 1).values[0] == O[a, b]
    T = scars.non_scar_indices
    S = scars.scar_indices
    k2 = scar_free_cumulant(spec, obs, T, a, b, [[0.0, 0.0]], 2).values[0]
    assert k2 == pytest.approx((O @ O)[a, b] - O[a, S] @ O[S, b], abs=1e-14)
    with pytest.raises(DomainError):
        scar_free_cumulant(spec, obs, T, T[0], b, [[0.0, 0.0]], 2)
    with pytest.raises(DomainError):
        scar_free_cumulant(spec, obs, T, a, b, [[0.0] * 5], 5)


def test_crossing_term_against_loops(n8):
    _, spec, obs, scars = n8
    O = obs.matrix
    for T in (scars.thermal_indices, scars.non_scar_indices):
        for a, b in [(scars.scar_indices[1], scars.scar_indices[1]),
                     (scars.scar_indices[1], scars.scar_indices[2])]:
            assert abs(crossing_term(spec, obs, T, a, b) - brute_crossing(O, T, a, b)) <= 1e-14
    assert crossing_term(spec, obs, scars.thermal_indices[:1], 1, 1) == 0


def test_scar_correlator_coincident_and_unitarity(pxp):
    _, spec, obs = pxp(10)
    O = obs.matrix
    a, b = 3, 7
    assert scar_correlator(spec, obs, (a, b), [[0.0, 0.0, 0.0]], 3).values[0] == pytest.approx((O @ O @ O)[a, b])
    t = uniform_grid(5.0, 11)
    vals = scar_correlator(spec, obs, (a, a), time_pattern("t,t", t), 2).values
    np.testing.assert_allclose(vals, (O @ O)[a, a], atol=1e-14)


def test_three_point_against_propagators(pxp):
    s, spec, obs = pxp(12)
    sc = select_scars(spec, s, count=4)
    a = central_scar(spec, sc)
    b = sc.scar_indices[-1]
    H = build_hamiltonian(s).matrix
    Ocfg = np.diag(observable_diagonal(s))
    times = time_pattern("0,t,0", np.linspace(0, 10, 7))
    ours = scar_correlator(spec, obs, make_pair(spec, a, b), times, 3).values
    ref = [propagator_threepoint(H, Ocfg, spec.vectors[:, a], spec.vectors[:, b], t) for t in times[:, 1]]
    assert np.abs(ours - ref).max() <= 1e-10


def test_palindromic_aa_is_real(pxp):
    s, spec, obs = pxp(12)
    a = central_scar(spec, select_scars(spec, s, count=4))
    vals = scar_correlator(spec, obs, (a, a), time_pattern("0,t,0", uniform_grid()), 3).values
    assert np.abs(vals.imag).max() <= 1e-10


def test_scar_share_of_thermal_two_point_shrinks(pxp):
    ratios = []
    for n in (8, 10, 12, 14):
        s, spec, obs = pxp(n)
        sc = select_scars(spec, s, count=4, band_fraction=0.8)
        ens = canonical_ensemble(spec, 0.0)
        full = thermal_correlator(ens, obs, [[0.0]], 2).values[0].real
        O2 = obs.matrix ** 2
        S = sc.scar_indices
        scar_part = (O2[S].sum() + O2[:, S].sum() - O2[np.ix_(S, S)].sum()) / spec.dim
        ratios.append(scar_part / full)
    assert all(x > y for x, y in zip(ratios, ratios[1:]))


# ------------------------------------------------------- factorization test

def test_identity_observable_factorizes_exactly(pxp):
    s, spec, _ = pxp(12)
    ident = observable_in_eigenbasis(spec, s, "identity")
    sc = select_scars(spec, s, count=4)
    for kind in ("canonical", "microcanonical"):
        r = factorization_test(spec, ident, sc, kind)
        np.testing.assert_allclose(r.lhs, r.rhs, atol=1e-14)
        assert r.frobenius_error <= 1e-13


def test_factorization_report_shapes_and_betas(pxp):
    s, spec, obs = pxp(14)
    sc = select_scars(spec, s, count=6)
    r = factorization_test(spec, obs, sc)
    assert r.lhs.shape == r.rhs.shape == (6, 6)
    np.testing.assert_allclose(r.lhs, r.lhs.T, atol=1e-15)
    for x in range(6):
        for y in range(6):
            e = (r.energies[x] + r.energies[y]) / (2 * 14)
            assert abs(energy_density(spec, r.betas[x, y], 14) - e) <= 1e-10
    micro = factorization_test(spec, obs, sc, "microcanonical")
    # both thermal factors estimate the same smooth function of energy
    assert np.abs(micro.thermal_factor - r.thermal_factor).max() <= 0.05
    assert micro.frobenius_error <= 0.35


def test_factorization_errors(pxp):
    s, spec, obs = pxp(10)
    with pytest.raises(DomainError):
        factorization_test(spec, obs, select_scars(spec, s, count=1))
    with pytest.raises(DomainError):
        factorization_test(spec, obs, select_scars(spec, s, count=2), thermal_set=[])


def test_time_helpers():
    t = time_pattern("0,t,-t", [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(t, [[0, 0, 0], [0, 1, -1], [0, 2, -2]])
    g = uniform_grid()
    assert len(g) == 401 and g[-1] == 40.0
    with pytest.raises(DomainError):
        CumulantSeries("x", np.zeros(3), np.zeros(2))
