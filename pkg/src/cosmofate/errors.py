"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where an operation is defined."""


class NumericError(ArithmeticError):
    """A numerical procedure (quadrature, root finding, fit) failed.

    Parameters
    ----------
    message : str
        Human readable description.
    residual : float, optional
        Last residual reached before giving up, when meaningful.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
