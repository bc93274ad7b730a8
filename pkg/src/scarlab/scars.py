"""Scar identification: Neel overlap, half-chain entanglement, band window."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .basis import ConstrainedBasis
from .errors import DomainError
from .sector import SectorBasis, lift_matrix, neel_representative
from .spectral import Spectrum

log = logging.getLogger(__name__)

METHODS = ("neel_overlap", "entropy_outlier")
RDM_CUTOFF = 1e-14
# relative slack under which two scores count as tied (lower index wins)
TIE_RTOL = 1e-9


def _schmidt_layout(configs: np.ndarray, cut_sites: int):
    left = configs & ((np.int64(1) << cut_sites) - 1)
    right = configs >> cut_sites
    lvals, li = np.unique(left, return_inverse=True)
    rvals, ri = np.unique(right, return_inverse=True)
    return li, ri, len(lvals), len(rvals)


def _entropy_from_weights(p: np.ndarray) -> float:
    p = p[p > RDM_CUTOFF]
    return float(-np.sum(p * np.log(p)))


def entanglement_entropy(basis: ConstrainedBasis, full_vector, cut_sites: int | None = None) -> float:
    """Von Neumann entropy (nats) of sites 0..cut_sites-1.

    Amplitudes are arranged as a (left config, right config) matrix; pairs that
    would violate the blockade across either boundary have no amplitude and
    stay zero. Its squared singular values are the reduced-density-matrix
    spectrum.
    """
    n = basis.n_sites
    if cut_sites is None:
        cut_sites = n // 2
    if not 1 <= cut_sites < n:
        raise DomainError(f"cut_sites must lie in [1, {n - 1}], got {cut_sites}")
    v = np.asarray(full_vector, dtype=float)
    if v.shape != (basis.dim,):
        raise DomainError(f"vector length {v.shape} does not match basis dimension {basis.dim}")
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise DomainError("state is not normalized")
    li, ri, nl, nr = _schmidt_layout(np.asarray(basis.configs), cut_sites)
    M = np.zeros((nl, nr))
    M[li, ri] = v
    s = np.linalg.svd(M, compute_uv=False)
    return _entropy_from_weights(s * s)


def eigenstate_entropies(spec: Spectrum, sector: SectorBasis, cut_sites: int | None = None,
                         chunk: int = 64) -> np.ndarray:
    """Half-chain entropy of every eigenstate, lifted to the full constrained basis."""
    basis = sector.parent
    n = basis.n_sites
    cut = n // 2 if cut_sites is None else cut_sites
    if not 1 <= cut < n:
        raise DomainError(f"cut_sites must lie in [1, {n - 1}], got {cut}")
    li, ri, nl, nr = _schmidt_layout(np.asarray(basis.configs), cut)
    out = np.empty(spec.dim)
    for lo in range(0, spec.dim, chunk):
        hi = min(lo + chunk, spec.dim)
        full = lift_matrix(sector, spec.vectors[:, lo:hi])
        M = np.zeros((hi - lo, nl, nr))
        M[:, li, ri] = full.T
        s = np.linalg.svd(M, compute_uv=False)
        for k in range(hi - lo):
            out[lo + k] = _entropy_from_weights(s[k] ** 2)
    return out


def neel_overlap(spec: Spectrum, sector: SectorBasis) -> np.ndarray:
    """|<Z2_sym|E_m>|^2 for every eigenstate m."""
    if sector.n_sites % 2:
        raise DomainError("no Néel state")
    row = spec.vectors[neel_representative(sector)]
    return row * row


@dataclass(frozen=True)
class ScarSet:
    scar_indices: np.ndarray
    thermal_indices: np.ndarray
    neel_overlap: np.ndarray
    entanglement_entropy: np.ndarray
    method: str
    band_window: tuple[float, float]

    @property
    def n_states(self) -> int:
        return len(self.entanglement_entropy)

    @property
    def in_window(self) -> np.ndarray:
        mask = np.zeros(self.n_states, dtype=bool)
        mask[self.scar_indices] = True
        mask[self.thermal_indices] = True
        return mask

    @property
    def non_scar_indices(self) -> np.ndarray:
        """Every eigenstate that is not a selected scar, band edges included."""
        mask = np.ones(self.n_states, dtype=bool)
        mask[self.scar_indices] = False
        return np.flatnonzero(mask)


def band_window(spec: Spectrum, band_fraction: float) -> tuple[float, float]:
    """Central ``band_fraction`` of the energy span."""
    if not 0 < band_fraction <= 1:
        raise DomainError(f"band_fraction must lie in (0, 1], got {band_fraction}")
    half = 0.5 * band_fraction * spec.span
    return spec.center - half, spec.center + half


def _argmax_low_index(scores: np.ndarray, candidates: np.ndarray) -> int:
    vals = scores[candidates]
    best = vals.max()
    tied = candidates[vals >= best - TIE_RTOL * max(abs(best), 1e-300)]
    return int(tied.min())


def select_scars(spec: Spectrum, sector: SectorBasis, method: str = "neel_overlap",
                 count: int = 6, band_fraction: float = 0.6,
                 overlaps: np.ndarray | None = None,
                 entropies: np.ndarray | None = None) -> ScarSet:
    """Partition the band window into scars and thermal states.

    ``neel_overlap`` splits the window into ``count`` equal energy bins and
    takes the largest-overlap state of each; ``entropy_outlier`` takes the
    ``count`` lowest-entropy window states. Precomputed ``overlaps`` or
    ``entropies`` may be passed to skip recomputation.
    """
    if method not in METHODS:
        raise DomainError(f"unknown scar method {method!r}; expected one of {METHODS}")
    if count < 0:
        raise DomainError("count must be non-negative")
    lo, hi = band_window(spec, band_fraction)
    slack = 1e-12 * max(1.0, spec.span)
    E = spec.energies
    window = np.flatnonzero((E >= lo - slack) & (E <= hi + slack))
    if count > len(window):
        raise DomainError(f"count={count} exceeds the {len(window)} states in the band window")

    if overlaps is None:
        overlaps = (neel_overlap(spec, sector) if sector.n_sites % 2 == 0
                    else np.full(spec.dim, np.nan))
    if entropies is None:
        entropies = eigenstate_entropies(spec, sector)

    chosen: list[int] = []
    if count and method == "neel_overlap":
        if np.isnan(overlaps).any():
            raise DomainError("no Néel state")
        width = (hi - lo) / count
        bins = np.clip(np.floor((E[window] - lo) / width).astype(int), 0, count - 1)
        for k in range(count):
            members = window[bins == k]
            if len(members) == 0:
                log.warning("energy bin %d of %d is empty; fewer scars selected", k, count)
                continue
            chosen.append(_argmax_low_index(overlaps, members))
    elif count:
        order = np.lexsort((window, entropies[window]))
        chosen = list(window[order[:count]])

    scars = np.array(sorted(chosen), dtype=int)
    thermal = np.setdiff1d(window, scars)
    return ScarSet(scar_indices=scars, thermal_indices=thermal,
                   neel_overlap=np.asarray(overlaps), entanglement_entropy=np.asarray(entropies),
                   method=method, band_window=(lo, hi))


def central_scar(spec: Spectrum, scars: ScarSet) -> int:
    """Scar closest to the middle of the spectrum (lower index on a tie)."""
    if len(scars.scar_indices) == 0:
        raise DomainError("no scars selected")
    dist = -np.abs(spec.energies - spec.center)
    return _argmax_low_index(dist, scars.scar_indices)


def adjacent_scar(spec: Spectrum, scars: ScarSet, a: int) -> int:
    """Scar nearest in energy to ``a`` other than ``a`` itself."""
    others = scars.scar_indices[scars.scar_indices != a]
    if len(others) == 0:
        raise DomainError("need at least two scars for an adjacent pair")
    dist = -np.abs(spec.energies - spec.energies[a])
    return _argmax_low_index(dist, others)
