"""Exception hierarchy shared by all modules."""


class InfravacError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(InfravacError, ValueError):
    """A configuration value violates a precondition."""


class ResourceError(InfravacError):
    """A requested discretization would exceed the configured memory cap."""


class CacheError(InfravacError):
    """A cache file is missing, truncated or corrupt."""


class GridMismatchError(InfravacError, ValueError):
    """Objects built on different grids (or block layouts) were combined."""


class NumericalError(InfravacError, ArithmeticError):
    """Non-finite values or a failed convergence check."""


class NotPSDError(NumericalError):
    """An operator expected to be positive semi-definite has a negative eigenvalue."""


class DegeneratePencilError(NumericalError):
    """The right-hand operator of a pencil has no eigenvalue above threshold."""


class SymmetryError(InfravacError, ValueError):
    """Angular data breaks the required k -> -k symmetry."""


class AlignmentError(InfravacError, ValueError):
    """A cutoff does not coincide with a panel edge of the grid."""


class GroupError(InfravacError, ValueError):
    """A Cayley table, action or subset fails a group-theoretic axiom."""
