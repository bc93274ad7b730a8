"""PXP Hamiltonian in the symmetry sector, its eigensystem, and eigenbasis observables.

Energies are in units of the PXP coupling; times are its inverse.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .basis import popcount
from .errors import DomainError, EigensolverError
from .sector import SectorBasis, neel_representative

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9
OBSERVABLES = ("sz_density", "identity")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SectorHamiltonian:
    matrix: np.ndarray
    n_sites: int
    sector_id: str

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Spectrum:
    """Ascending energies and orthonormal eigenvectors (column m <-> energies[m])."""

    energies: np.ndarray
    vectors: np.ndarray
    n_sites: int
    sector_id: str

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def span(self) -> float:
        return float(self.energies[-1] - self.energies[0])

    @property
    def center(self) -> float:
        return 0.5 * float(self.energies[-1] + self.energies[0])


@dataclass(frozen=True)
class EigenObservable:
    """Matrix elements <m|O|n> of an observable in the energy eigenbasis."""

    matrix: np.ndarray
    observable_id: str

    @property
    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.matrix)


def build_hamiltonian(sector: SectorBasis) -> SectorHamiltonian:
    """Symmetry-reduced H = sum_j P_{j-1} X_j P_{j+1}.

    Between symmetrized states, <t|H|r> = sqrt(|orbit r| / |orbit t|) times the
    number of admissible single flips taking the representative r into orbit t.
    """
    n = sector.n_sites
    parent = sector.parent
    reps = sector.representatives
    sizes = sector.orbit_sizes.astype(float)
    dim = sector.dim_sector
    H = np.zeros((dim, dim))
    cols = np.arange(dim)
    for j in range(n):
        left = (reps >> ((j - 1) % n)) & 1
        right = (reps >> ((j + 1) % n)) & 1
        ok = (left == 0) & (right == 0)
        src = cols[ok]
        flipped = reps[ok] ^ (np.int64(1) << j)
        dst = sector.orbit_of[parent.indices_of(flipped)]
        np.add.at(H, (dst, src), np.sqrt(sizes[src] / sizes[dst]))
    return SectorHamiltonian(matrix=_frozen(H), n_sites=n, sector_id=sector.sector_id)


def _degenerate_clusters(energies: np.ndarray, tol: float):
    start = 0
    for k in range(1, len(energies) + 1):
        if k == len(energies) or energies[k] - energies[start] > tol:
            if k - start > 1:
                yield start, k
            start = k


def _canonicalize_cluster(block: np.ndarray, pivot, diag_op) -> np.ndarray:
    """Fix an eigensolver-independent basis for one degenerate eigenspace.

    If ``pivot`` (a sector vector) has weight in the eigenspace, its normalized
    projection becomes the first basis vector. The remaining directions are
    the eigenvectors of the diagonal operator ``diag_op`` restricted to the
    complement, ascending.
    """
    m = block.shape[1]
    lead = None
    if pivot is not None:
        p = block.T @ pivot
        norm = np.linalg.norm(p)
        if norm > 1e-10:
            lead = p / norm
    if lead is None:
        comp = np.eye(m)
    else:
        q, _ = np.linalg.qr(np.column_stack([lead, np.eye(m)]))
        comp = q[:, 1:m]
    sub = block @ comp
    restricted = sub.T @ (diag_op[:, None] * sub)
    _, rot = np.linalg.eigh(0.5 * (restricted + restricted.T))
    rest = sub @ rot
    if lead is None:
        return rest
    return np.column_stack([block @ lead, rest])


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude component positive; first index wins a tie
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def diagonalize(h: SectorHamiltonian, sector: SectorBasis | None = None,
                degeneracy_tol: float = 1e-9) -> Spectrum:
    """Dense symmetric eigendecomposition with a reproducible gauge.

    When ``sector`` is given, degenerate eigenspaces (the PXP zero modes) are
    rotated to a canonical basis: the Neel projection first (even N), then
    the eigenbasis of the magnetization within the rest. Without it the basis
    inside a degenerate eigenspace is whatever LAPACK returns.
    """
    H = np.asarray(h.matrix)
    if H.shape[0] == 0:
        raise DomainError("empty Hamiltonian")
    energies, vectors = np.linalg.eigh(H)
    scale = max(1.0, float(np.max(np.abs(energies))))

    if sector is not None:
        if sector.dim_sector != H.shape[0]:
            raise DomainError("sector and Hamiltonian dimensions differ")
        pivot = None
        if sector.n_sites % 2 == 0:
            pivot = np.zeros(sector.dim_sector)
            pivot[neel_representative(sector)] = 1.0
        diag_op = _sz_density_diagonal(sector)
        for lo, hi in _degenerate_clusters(energies, degeneracy_tol * scale):
            vectors[:, lo:hi] = _canonicalize_cluster(vectors[:, lo:hi], pivot, diag_op)

    vectors = _fix_signs(vectors)
    norm_h = float(np.max(np.abs(energies)))
    residual = float(np.max(np.abs(H @ vectors - vectors * energies))) if H.size else 0.0
    if residual > RESIDUAL_TOL * max(norm_h, 1.0):
        raise EigensolverError(
            f"eigenpair residual {residual:.3e} exceeds {RESIDUAL_TOL:g} * ||H|| "
            f"(||H|| = {norm_h:.3e}, dim = {H.shape[0]})"
        )
    log.debug("diagonalized dim=%d residual=%.2e", H.shape[0], residual)
    return Spectrum(energies=_frozen(energies), vectors=_frozen(vectors),
                    n_sites=h.n_sites, sector_id=h.sector_id)


def _sz_density_diagonal(sector: SectorBasis) -> np.ndarray:
    n = sector.n_sites
    ups = popcount(sector.representatives)
    return (2.0 * ups - n) / (2.0 * n)


def observable_diagonal(sector: SectorBasis, observable_id: str = "sz_density") -> np.ndarray:
    """Configuration-basis diagonal of a translation/reflection invariant observable."""
    if observable_id == "sz_density":
        return _sz_density_diagonal(sector)
    if observable_id == "identity":
        return np.ones(sector.dim_sector)
    raise DomainError(f"unknown observable {observable_id!r}; expected one of {OBSERVABLES}")


def observable_in_eigenbasis(spec: Spectrum, sector: SectorBasis,
                             observable_id: str = "sz_density") -> EigenObservable:
    """O_mn = v_m^T diag(O) v_n for O = (1/2N) sum_j sigma^z_j by default."""
    if spec.dim != sector.dim_sector or spec.n_sites != sector.n_sites:
        raise DomainError("spectrum and sector are inconsistent")
    d = observable_diagonal(sector, observable_id)
    V = spec.vectors
    O = V.T @ (d[:, None] * V)
    O = 0.5 * (O + O.T)
    return EigenObservable(matrix=_frozen(O), observable_id=observable_id)


def solve_pxp(n_sites: int, observable_id: str = "sz_density"):
    """Basis -> sector -> H -> spectrum -> observable, in one call."""
    from .basis import enumerate_basis
    from .sector import build_sector

    sector = build_sector(enumerate_basis(n_sites))
    spec = diagonalize(build_hamiltonian(sector), sector)
    return sector, spec, observable_in_eigenbasis(spec, sector, observable_id)
