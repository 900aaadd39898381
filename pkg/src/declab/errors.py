"""Exception hierarchy shared by all declab modules."""


class DeclabError(Exception):
    """Base class for every error raised by declab."""


class DimensionError(DeclabError, ValueError):
    pass


class NumericalError(DeclabError, ArithmeticError):
    pass


class StateError(DeclabError, ValueError):
    """A matrix violates the density-matrix invariants."""


class BasisError(DeclabError, ValueError):
    pass


class IllConditionedAlgebra(DeclabError, ValueError):
    pass


class NotInAlgebra(DeclabError, ValueError):
    pass


class InsufficientData(DeclabError, ValueError):
    pass


class ResourceLimit(DeclabError, MemoryError):
    pass


class GridError(DeclabError, ValueError):
    pass


class InsufficientPeaks(InsufficientData):
    pass


class OutOfBand(DeclabError, ValueError):
    pass


class InconsistentData(DeclabError, ValueError):
    pass


class ConfigError(DeclabError, ValueError):
    pass
