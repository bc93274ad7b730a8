"""Exception types raised by scarlab."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class EigensolverError(RuntimeError):
    """Dense diagonalization produced an inaccurate eigensystem."""


class CacheError(IOError):
    """A spectrum cache file is unreadable, from another version, or corrupt."""
