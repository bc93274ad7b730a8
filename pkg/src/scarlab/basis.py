"""Rydberg-constrained configuration space of a periodic spin-1/2 chain.

Configurations are stored as integer bitmasks; bit ``j`` set means site ``j``
is up. With periodic boundaries no two cyclically adjacent bits may be set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

MAX_SITES = 63


def rotate_left(configs, n_sites: int):
    """Cyclic shift by one site (site j -> j+1 mod N), elementwise on bitmasks."""
    mask = (1 << n_sites) - 1
    c = np.asarray(configs, dtype=np.int64)
    return ((c << 1) | (c >> (n_sites - 1))) & mask


def reflect(configs, n_sites: int):
    """Mirror image under site j -> N-1-j."""
    c = np.asarray(configs, dtype=np.int64)
    out = np.zeros_like(c)
    for j in range(n_sites):
        out |= ((c >> j) & 1) << (n_sites - 1 - j)
    return out


def popcount(configs):
    c = np.asarray(configs, dtype=np.int64)
    counts = np.zeros(c.shape, dtype=np.int64)
    while np.any(c):
        counts += c & 1
        c = c >> 1
    return counts


@dataclass(frozen=True)
class ConstrainedBasis:
    """Ordered set of admissible configurations with O(log D) index lookup.

    ``configs`` is strictly ascending; ``index_of`` is a dict view of the
    inverse map kept for scalar lookups, ``indices_of`` handles arrays.
    """

    n_sites: int
    configs: np.ndarray
    index_of: dict = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.configs)

    def __len__(self) -> int:
        return len(self.configs)

    def __contains__(self, config) -> bool:
        return int(config) in self.index_of

    def indices_of(self, configs) -> np.ndarray:
        """Vectorized inverse lookup; raises KeyError for non-members."""
        c = np.asarray(configs, dtype=np.int64)
        pos = np.searchsorted(self.configs, c)
        pos = np.clip(pos, 0, self.dim - 1)
        if not np.all(self.configs[pos] == c):
            raise KeyError("configuration not in constrained basis")
        return pos


def enumerate_basis(n_sites: int) -> ConstrainedBasis:
    """All N-bit masks with no two cyclically adjacent up-spins.

    Built by the transfer construction over open chains (strings with no
    ``11`` substring) followed by removal of strings with both end bits set,
    so the cost is proportional to the output size rather than ``2**N``.
    """
    if n_sites < 3:
        raise DomainError("chain too short for periodic blockade")
    if n_sites > MAX_SITES:
        raise DomainError(f"n_sites={n_sites} exceeds the 64-bit mask limit")

    # open-chain strings grown from the top bit down; ending_0/ending_1 hold
    # strings whose most recently added (lowest) bit is 0 or 1
    ending_0 = np.array([0], dtype=np.int64)
    ending_1 = np.array([1], dtype=np.int64)
    for _ in range(n_sites - 1):
        new_0 = np.concatenate([ending_0, ending_1]) << 1
        new_1 = (ending_0 << 1) | 1
        ending_0, ending_1 = new_0, new_1
    configs = np.concatenate([ending_0, ending_1])
    top = np.int64(1) << (n_sites - 1)
    configs = configs[~(((configs & top) != 0) & ((configs & 1) != 0))]
    configs = np.sort(configs)
    configs.setflags(write=False)
    index_of = {int(c): k for k, c in enumerate(configs)}
    return ConstrainedBasis(n_sites=n_sites, configs=configs, index_of=index_of)


def neighbors_down(basis: ConstrainedBasis, config: int, site: int) -> bool:
    """True iff both cyclic neighbours of ``site`` are down in ``config``."""
    n = basis.n_sites
    if not 0 <= site < n:
        raise IndexError(f"site {site} out of range for N={n}")
    config = int(config)
    if config not in basis.index_of:
        raise DomainError(f"config {config:#b} is not an admissible configuration")
    left = (site - 1) % n
    right = (site + 1) % n
    return not ((config >> left) & 1 or (config >> right) & 1)
