"""Exception types raised across the package."""


class SublinopError(Exception):
    """Base class for all errors raised by sublinop."""


class DimensionError(SublinopError, ValueError):
    """Operands have incompatible or unsupported dimensions."""


class NotEllipticError(SublinopError, ValueError):
    """The operator does not satisfy the ellipticity an operation requires."""


class ConvergenceError(SublinopError, RuntimeError):
    """An iterative method hit its iteration cap.

    ``residual`` carries the last measured update or residual.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class GridError(SublinopError, ValueError):
    """A stencil or kernel reaches outside the available grid nodes."""


class InconsistencyError(SublinopError, RuntimeError):
    """A self-check on a computed result failed."""
