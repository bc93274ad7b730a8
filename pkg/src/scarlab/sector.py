"""Zero-momentum, reflection-even symmetry sector of the constrained chain.

Symmetry group: the N translations (site j -> j+1 mod N) composed with
{identity, reflection j -> N-1-j}. At k=0 with even parity every character
is +1, so each orbit contributes exactly one symmetrized state

    |r> = |orbit(r)|^{-1/2} sum_{s in orbit(r)} |s>,

and the sector dimension is the number of orbits. The representative of an
orbit is its smallest bitmask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import ConstrainedBasis, reflect, rotate_left
from .errors import DomainError

SECTOR_ID = "k0_even"


@dataclass(frozen=True)
class SectorBasis:
    parent: ConstrainedBasis
    representatives: np.ndarray
    orbit_sizes: np.ndarray
    norms: np.ndarray
    # position of each parent configuration's orbit in ``representatives``
    orbit_of: np.ndarray

    @property
    def dim_sector(self) -> int:
        return len(self.representatives)

    @property
    def n_sites(self) -> int:
        return self.parent.n_sites

    @property
    def sector_id(self) -> str:
        return SECTOR_ID

    def index_of_representative(self, rep: int) -> int:
        pos = int(np.searchsorted(self.representatives, rep))
        if pos >= self.dim_sector or self.representatives[pos] != rep:
            raise KeyError(f"{rep:#b} is not an orbit representative")
        return pos

    def representative_of(self, config: int) -> int:
        k = self.parent.index_of[int(config)]
        return int(self.representatives[self.orbit_of[k]])


@dataclass(frozen=True)
class SectorVector:
    sector: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        if np.shape(self.amplitudes) != (self.sector.dim_sector,):
            raise DomainError(
                f"amplitude length {np.shape(self.amplitudes)} does not match "
                f"sector dimension {self.sector.dim_sector}"
            )


def orbit_images(configs, n_sites: int) -> np.ndarray:
    """All 2N images of each config, shape (2N, len(configs))."""
    images = []
    x = np.asarray(configs, dtype=np.int64)
    for _ in range(n_sites):
        images.append(x)
        images.append(reflect(x, n_sites))
        x = rotate_left(x, n_sites)
    return np.array(images)


def build_sector(basis: ConstrainedBasis) -> SectorBasis:
    images = orbit_images(basis.configs, basis.n_sites)
    reps_per_config = images.min(axis=0)
    reps, orbit_of = np.unique(reps_per_config, return_inverse=True)
    orbit_sizes = np.bincount(orbit_of)
    # |r> puts amplitude norms[r] on each orbit member
    norms = 1.0 / np.sqrt(orbit_sizes)
    for arr in (reps, orbit_sizes, norms, orbit_of):
        arr.setflags(write=False)
    return SectorBasis(
        parent=basis,
        representatives=reps,
        orbit_sizes=orbit_sizes,
        norms=norms,
        orbit_of=orbit_of,
    )


def lift(vec: SectorVector) -> np.ndarray:
    """Expand a sector vector over the full constrained basis."""
    s = vec.sector
    amps = np.asarray(vec.amplitudes)
    return amps[s.orbit_of] * s.norms[s.orbit_of]


def lift_matrix(sector: SectorBasis, vectors: np.ndarray) -> np.ndarray:
    """Column-wise :func:`lift` of a (dim_sector, m) array."""
    vectors = np.asarray(vectors)
    return vectors[sector.orbit_of] * sector.norms[sector.orbit_of][:, None]


def project(sector: SectorBasis, full_vector) -> SectorVector:
    """Overlaps of a full-basis vector with every symmetrized sector state."""
    full_vector = np.asarray(full_vector)
    if full_vector.shape != (sector.parent.dim,):
        raise DomainError(
            f"vector length {full_vector.shape} does not match constrained "
            f"basis dimension {sector.parent.dim}"
        )
    weighted = full_vector * sector.norms[sector.orbit_of]
    amps = np.bincount(sector.orbit_of, weights=weighted, minlength=sector.dim_sector)
    return SectorVector(sector, amps)


def neel_representative(sector: SectorBasis) -> int:
    """Sector index of the symmetrized Neel state; N must be even."""
    n = sector.n_sites
    if n % 2:
        raise DomainError("no Néel state")
    even = sum(1 << j for j in range(0, n, 2))
    odd = sum(1 << j for j in range(1, n, 2))
    return sector.index_of_representative(min(even, odd))
