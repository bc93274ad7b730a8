"""Thermal and scar correlators and their free cumulants in the energy eigenbasis.

Heisenberg convention: O(t) = e^{iHt} O e^{-iHt}, so
O(t)_mn = O_mn exp(i (E_m - E_n) t).

Time arguments are 2-D arrays of shape (n_points, n_args): row p holds the
time vector at grid point p. :func:`time_pattern` builds them from patterns
such as ``"0,t,0"``.

Sums over distinct thermal indices are evaluated by inclusion-exclusion over
index coincidences, which keeps every kernel at O(D^2) per time point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .spectral import EigenObservable, Spectrum

CANONICAL = "canonical"
MICROCANONICAL = "microcanonical"
ENSEMBLE_KINDS = (CANONICAL, MICROCANONICAL)
DEFAULT_WINDOW_FRACTION = 0.1


# ---------------------------------------------------------------- time grids

def time_pattern(pattern, grid) -> np.ndarray:
    """Expand a pattern like ``"0,t,0"`` over a 1-D grid of t values.

    Tokens are ``t``, ``-t`` or numeric constants.
    """
    tokens = pattern.split(",") if isinstance(pattern, str) else list(pattern)
    grid = np.asarray(grid, dtype=float)
    cols = []
    for tok in tokens:
        tok = str(tok).strip()
        if tok == "t":
            cols.append(grid)
        elif tok == "-t":
            cols.append(-grid)
        else:
            cols.append(np.full_like(grid, float(tok)))
    return np.stack(cols, axis=1) if cols else np.zeros((len(grid), 0))


def uniform_grid(t_max: float = 40.0, n_points: int = 401) -> np.ndarray:
    return np.linspace(0.0, t_max, n_points)


def _as_times(times, n_args: int) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 2 or t.shape[1] != n_args:
        raise DomainError(f"times must have shape (n_points, {n_args}), got {t.shape}")
    return t


def _phases(E: np.ndarray, t: np.ndarray) -> np.ndarray:
    """exp(i E_m t_p), shape (D, n_points)."""
    return np.exp(1j * np.outer(E, t))


# ----------------------------------------------------------------- ensembles

@dataclass(frozen=True)
class Ensemble:
    """Thermal weights p_i over the eigenstates.

    Canonical: p_i = exp(-beta E_i) / Z. Microcanonical: uniform over
    |E_i - center| <= window_width / 2, with Z the number of states there.
    """

    spectrum: Spectrum
    kind: str
    weights: np.ndarray
    log_z: float
    beta: float = math.nan
    center: float = math.nan
    window_width: float = math.nan

    @property
    def Z(self) -> float:
        return math.exp(self.log_z)

    def mean(self, values) -> float:
        return float(np.dot(self.weights, values))


def canonical_ensemble(spec: Spectrum, beta: float) -> Ensemble:
    E = np.asarray(spec.energies)
    x = -beta * E
    shift = x.max()
    w = np.exp(x - shift)
    s = w.sum()
    return Ensemble(spectrum=spec, kind=CANONICAL, weights=w / s,
                    log_z=float(shift + math.log(s)), beta=float(beta))


def microcanonical_ensemble(spec: Spectrum, center: float, window_width: float) -> Ensemble:
    E = np.asarray(spec.energies)
    inside = np.abs(E - center) <= 0.5 * window_width
    n = int(inside.sum())
    if n == 0:
        raise DomainError(f"empty microcanonical window at E={center:g} width={window_width:g}")
    return Ensemble(spectrum=spec, kind=MICROCANONICAL, weights=inside / n,
                    log_z=math.log(n), center=float(center), window_width=float(window_width))


def energy_density(spec: Spectrum, beta: float, n_sites: int) -> float:
    """<H>_beta / N."""
    ens = canonical_ensemble(spec, beta)
    return ens.mean(spec.energies) / n_sites


def solve_beta(spec: Spectrum, target_energy_density: float, n_sites: int | None = None,
               tol: float = 1e-10) -> float:
    """Inverse temperature whose canonical energy density equals the target."""
    n = spec.n_sites if n_sites is None else n_sites
    E = np.asarray(spec.energies)
    lo_e, hi_e = E[0] / n, E[-1] / n
    if not lo_e < target_energy_density < hi_e:
        raise DomainError(
            f"unreachable energy density {target_energy_density:g}; "
            f"open range is ({lo_e:g}, {hi_e:g})"
        )

    def f(b):
        return energy_density(spec, b, n) - target_energy_density

    beta_max = 1.0
    while not (f(-beta_max) > 0 > f(beta_max)):
        beta_max *= 2.0
        if beta_max > 1e6:
            raise DomainError(f"could not bracket beta for energy density {target_energy_density:g}")
    grid = np.linspace(-beta_max, beta_max, 33)
    dens = np.array([f(b) for b in grid])
    if np.any(np.diff(dens) > 1e-12):
        raise DomainError("<H>_beta is not monotone on the bracket; spectrum is inconsistent")
    if f(0.0) == 0.0:
        return 0.0
    beta = brentq(f, -beta_max, beta_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(beta)) > tol:
        raise DomainError(f"beta solver reached residual {abs(f(beta)):.2e} > {tol:g}")
    return float(beta)


def make_ensemble(spec: Spectrum, energy: float, kind: str = CANONICAL,
                  window_fraction: float = DEFAULT_WINDOW_FRACTION) -> Ensemble:
    """Ensemble matched to a total energy (canonical) or centred on it (microcanonical)."""
    if kind == CANONICAL:
        return canonical_ensemble(spec, solve_beta(spec, energy / spec.n_sites))
    if kind == MICROCANONICAL:
        return microcanonical_ensemble(spec, energy, window_fraction * spec.span)
    raise DomainError(f"unknown ensemble kind {kind!r}; expected one of {ENSEMBLE_KINDS}")


@dataclass(frozen=True)
class ScarPair:
    a: int
    b: int
    E_a: float
    E_b: float
    beta_ab: float


def make_pair(spec: Spectrum, a: int, b: int, scar_indices=None) -> ScarPair:
    """Scar pair with beta_ab matched to the density (E_a + E_b) / 2N."""
    if scar_indices is not None:
        missing = {a, b} - set(int(s) for s in scar_indices)
        if missing:
            raise DomainError(f"indices {sorted(missing)} are not selected scars")
    Ea, Eb = float(spec.energies[a]), float(spec.energies[b])
    beta = solve_beta(spec, (Ea + Eb) / (2 * spec.n_sites))
    return ScarPair(a=int(a), b=int(b), E_a=Ea, E_b=Eb, beta_ab=beta)


@dataclass(frozen=True)
class CumulantSeries:
    label: str
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise DomainError(f"{self.label}: {len(self.times)} times vs {len(self.values)} values")


def _mask(dim: int, indices) -> np.ndarray:
    m = np.zeros(dim, dtype=bool)
    idx = np.asarray(indices, dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= dim):
        raise DomainError("thermal_set index out of range")
    m[idx] = True
    return m


# ------------------------------------------------------- thermal correlators

def thermal_correlator(ens: Ensemble, obs: EigenObservable, times, q: int) -> CumulantSeries:
    """F^(q)(t_1..t_{q-1}) = <O(t_1) ... O(t_{q-1}) O(0)>, all indices unrestricted."""
    if q not in (1, 2, 3):
        raise DomainError(f"thermal_correlator supports q in {{1,2,3}}, got {q}")
    t = _as_times(times, q - 1)
    O = np.asarray(obs.matrix)
    E = np.asarray(ens.spectrum.energies)
    p = ens.weights
    if q == 1:
        vals = np.full(len(t), ens.mean(np.diagonal(O)), dtype=complex)
    elif q == 2:
        U = _phases(E, t[:, 0])
        A = p[:, None] * O * O
        vals = np.sum(U * (A @ U.conj()), axis=0)
    else:
        vals = np.empty(len(t), dtype=complex)
        for k, (t1, t2) in enumerate(t):
            u1, u2 = np.exp(1j * E * t1), np.exp(1j * E * t2)
            B = O @ (u2.conj()[:, None] * O)          # B_jl = sum_k O_jk e^{-iE_k t2} O_kl
            left = (p * u1)[:, None] * O * (u1.conj() * u2)[None, :]
            vals[k] = np.sum(left * B.T)
    return CumulantSeries(f"F_th_{q}", t, vals)


def thermal_free_cumulant(ens: Ensemble, obs: EigenObservable, thermal_set, times, q: int) -> CumulantSeries:
    """k_th^(q) with all indices in ``thermal_set`` and pairwise distinct.

    q=1: sum_{i in T} p_i O_ii.
    q=2: sum_{i != j in T} p_i O_ij O_ji exp(i (E_i - E_j) t).
    """
    if q not in (1, 2):
        raise DomainError(f"thermal_free_cumulant supports q in {{1,2}}, got {q}")
    t = _as_times(times, q - 1)
    O = np.asarray(obs.matrix)
    E = np.asarray(ens.spectrum.energies)
    m = _mask(len(E), thermal_set)
    pT = np.where(m, ens.weights, 0.0)
    d = np.diagonal(O)
    if q == 1:
        return CumulantSeries("k_th_1", t, np.full(len(t), np.dot(pT, d), dtype=complex))
    A = pT[:, None] * (O * O) * m[None, :]
    U = _phases(E, t[:, 0])
    full = np.sum(U * (A @ U.conj()), axis=0)
    return CumulantSeries("k_th_2", t, full - np.dot(pT, d * d))


# ----------------------------------------------------------- scar correlators

def _endpoints(pair) -> tuple[int, int]:
    if isinstance(pair, ScarPair):
        return pair.a, pair.b
    a, b = pair
    return int(a), int(b)


def scar_correlator(spec: Spectrum, obs: EigenObservable, pair, times, q: int) -> CumulantSeries:
    """<a| O(t_1) ... O(t_q) |b> with every intermediate eigenstate summed.

    ``pair`` is a :class:`ScarPair` or a plain ``(a, b)`` tuple.
    """
    a, b = _endpoints(pair)
    if q not in (2, 3, 4):
        raise DomainError(f"scar_correlator supports q in {{2,3,4}}, got {q}")
    t = _as_times(times, q)
    O = np.asarray(obs.matrix)
    E = np.asarray(spec.energies)
    V = np.zeros((len(E), len(t)), dtype=complex)
    V[b] = 1.0
    for k in range(q - 1, -1, -1):
        U = _phases(E, t[:, k])
        V = U * (O @ (U.conj() * V))
    return CumulantSeries(f"F_sc_{q}", t, V[a].copy())


def _chain_vectors(O, E, rows, cols, t_first, t_last, m):
    """Left row vectors O(t_first)_{r i} and right column vectors O(t_last)_{j c}, T-masked.

    Shapes (R, D, n_points) and (D, C, n_points).
    """
    Ur = np.exp(1j * np.outer(E[rows], t_first))          # (R, n)
    Ui = np.exp(1j * np.outer(E, t_first))                # (D, n)
    X = O[rows][:, :, None] * Ur[:, None, :] * Ui.conj()[None, :, :]
    X *= m[None, :, None]
    Uj = np.exp(1j * np.outer(E, t_last))
    Uc = np.exp(1j * np.outer(E[cols], t_last))
    Y = O[:, cols][:, :, None] * Uj[:, None, :] * Uc.conj()[None, :, :]
    Y *= m[:, None, None]
    return X, Y


def _phased(O, E, t):
    u = np.exp(1j * E * t)
    return u[:, None] * O * u.conj()[None, :]


def scar_free_cumulant(spec: Spectrum, obs: EigenObservable, thermal_set, a: int, b: int,
                       times, q: int) -> CumulantSeries:
    """k_sc^(q)_ab(t_1..t_q) = sum over distinct thermal i_1..i_{q-1} of O(t_1)_{a i_1} ... O(t_q)_{i_{q-1} b}."""
    if q not in (1, 2, 3, 4):
        raise DomainError(f"scar_free_cumulant supports q in {{1,2,3,4}}, got {q}")
    t = _as_times(times, q)
    O = np.asarray(obs.matrix)
    E = np.asarray(spec.energies)
    m = _mask(len(E), thermal_set)
    if m[a] or m[b]:
        raise DomainError("scar endpoints must not belong to the thermal set")
    if q == 1:
        vals = O[a, b] * np.exp(1j * (E[a] - E[b]) * t[:, 0])
        return CumulantSeries("k_sc_1", t, vals)
    X, Y = _chain_vectors(O, E, [a], [b], t[:, 0], t[:, -1], m)
    x, y = X[0], Y[:, 0]                                  # (D, n)
    if q == 2:
        return CumulantSeries("k_sc_2", t, np.sum(x * y, axis=0))
    d = np.diagonal(O) * m
    vals = np.empty(len(t), dtype=complex)
    for p in range(len(t)):
        M2 = _phased(O, E, t[p, 1]) * m[None, :]
        xp, yp = x[:, p], y[:, p]
        if q == 3:
            vals[p] = xp @ M2 @ yp - np.sum(xp * d * yp)
            continue
        M3 = _phased(O, E, t[p, 2]) * m[None, :]
        s_all = xp @ M2 @ M3 @ yp
        s_ij = (xp * d) @ M3 @ yp
        s_jk = xp @ M2 @ (d * yp)
        g = np.sum(M2 * M3.T, axis=1)
        s_ik = np.sum(xp * g * yp)
        s_ijk = np.sum(xp * d * d * yp)
        vals[p] = s_all - s_ij - s_jk - s_ik + 2 * s_ijk
    return CumulantSeries(f"k_sc_{q}", t, vals)


def crossing_term(spec: Spectrum, obs: EigenObservable, thermal_set, a: int, b: int) -> complex:
    """sum_{i != j in T} O_ai O_ij O_ji O_ij O_jb (lowest crossing diagram at t = 0)."""
    O = np.asarray(obs.matrix)
    m = _mask(len(spec.energies), thermal_set)
    x = O[a] * m
    y = O[:, b] * m
    C = O ** 3
    return complex(x @ C @ y - np.sum(x * np.diagonal(C) * y))


# ------------------------------------------------------- factorization test

@dataclass(frozen=True)
class FactorizationReport:
    scars: np.ndarray
    energies: np.ndarray
    betas: np.ndarray
    thermal_factor: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    ens_kind: str

    @property
    def rel_error(self) -> np.ndarray:
        """Entrywise |lhs - rhs| / |lhs| (zero where both vanish)."""
        diff = np.abs(self.lhs - self.rhs)
        den = np.abs(self.lhs)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(den > 0, diff / np.where(den > 0, den, 1.0), np.where(diff > 0, np.inf, 0.0))
        return out

    @property
    def frobenius_error(self) -> float:
        num = np.linalg.norm(self.lhs - self.rhs)
        den = np.linalg.norm(self.lhs)
        if den == 0:
            return 0.0 if num == 0 else math.inf
        return float(num / den)


def factorization_test(spec: Spectrum, obs: EigenObservable, scarset, ens_kind: str = CANONICAL,
                       window_fraction: float = DEFAULT_WINDOW_FRACTION,
                       thermal_set=None) -> FactorizationReport:
    """Compare sum_i O_ai O_ii O_ib with (sum_i O_ai O_ib) times the thermal O_jj average.

    i runs over the thermal set (in-window non-scars by default); the thermal
    factor averages O_jj over every eigenstate, canonically at beta_ab or in
    a microcanonical window around (E_a + E_b) / 2.
    """
    scars = np.asarray(scarset.scar_indices, dtype=int)
    if len(scars) < 2:
        raise DomainError("factorization test needs at least two scars")
    T = np.asarray(scarset.thermal_indices if thermal_set is None else thermal_set, dtype=int)
    if len(T) == 0:
        raise DomainError("empty thermal set")
    if ens_kind not in ENSEMBLE_KINDS:
        raise DomainError(f"unknown ensemble kind {ens_kind!r}")
    O = np.asarray(obs.matrix)
    E = np.asarray(spec.energies)
    d = np.diagonal(O)
    OS_T = O[np.ix_(scars, T)]
    lhs = (OS_T * d[T]) @ OS_T.T
    overlap = OS_T @ OS_T.T
    n = len(scars)
    betas = np.empty((n, n))
    factor = np.empty((n, n))
    for x in range(n):
        for y in range(x, n):
            e_mid = 0.5 * (E[scars[x]] + E[scars[y]])
            beta = solve_beta(spec, e_mid / spec.n_sites)
            if ens_kind == CANONICAL:
                th = canonical_ensemble(spec, beta).mean(d)
            else:
                th = microcanonical_ensemble(spec, e_mid, window_fraction * spec.span).mean(d)
            betas[x, y] = betas[y, x] = beta
            factor[x, y] = factor[y, x] = th
    return FactorizationReport(scars=scars, energies=E[scars], betas=betas, thermal_factor=factor,
                               lhs=lhs, rhs=overlap * factor, ens_kind=ens_kind)
