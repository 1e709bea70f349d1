"""Exception types shared across the package."""


class PlanarLoopsError(Exception):
    """Base class for all package errors."""


class DimensionError(PlanarLoopsError):
    """Operands have incompatible sizes (variable counts, point counts, ...)."""


class ShadingError(PlanarLoopsError):
    """Diagrams cannot be combined because their shadings disagree."""


class CompositionError(PlanarLoopsError):
    """Formal composition/inversion preconditions violated."""


class ClosureError(PlanarLoopsError):
    """A word table does not cover a word required by the recursion.

    Attributes:
        missing_length: length of the word that fell outside the table.
    """

    def __init__(self, message: str, missing_length: int | None = None):
        super().__init__(message)
        self.missing_length = missing_length


class ResourceError(PlanarLoopsError):
    """A combinatorial search would exceed the configured size guard.

    Attributes:
        bound: the computed work estimate that tripped the guard.
    """

    def __init__(self, message: str, bound: float | None = None):
        super().__init__(message)
        self.bound = bound


class RegimeError(PlanarLoopsError):
    """Parameters fall outside the regime where a solver is valid."""


class ConvergenceError(PlanarLoopsError):
    """An iterative solver did not reach its tolerance.

    Attributes:
        residual: the last residual or gradient norm observed.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class BranchError(PlanarLoopsError):
    """A point sits on a branch cut or pole where evaluation is undefined."""
