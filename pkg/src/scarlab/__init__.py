"""Exact diagonalization of the PXP chain and free-cumulant checks on its scar states."""

from .basis import ConstrainedBasis, enumerate_basis
from .cumulants import (
    Ensemble,
    ScarPair,
    crossing_term,
    factorization_test,
    make_pair,
    scar_correlator,
    scar_free_cumulant,
    solve_beta,
    thermal_correlator,
    thermal_free_cumulant,
)
from .decomposition import decompose_scar_correlator, diagrams
from .errors import CacheError, DomainError, EigensolverError
from .haar import HaarSampler, sample_haar
from .partitions import noncrossing_partitions
from .scars import ScarSet, select_scars
from .sector import SectorBasis, build_sector
from .spectral import Spectrum, diagonalize, build_hamiltonian, observable_in_eigenbasis, solve_pxp

__version__ = "0.1.0"
