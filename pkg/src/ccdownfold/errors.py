"""Exception hierarchy shared by all modules."""


class DownfoldError(Exception):
    """Base class for all package errors."""


class ParseError(DownfoldError):
    pass


class BasisError(DownfoldError):
    pass


class DomainError(DownfoldError):
    pass


class DegeneracyError(DownfoldError):
    pass


class UnsupportedError(DownfoldError):
    pass


class ExportError(DownfoldError):
    pass


class ConvergenceError(DownfoldError):
    """Iterative solver failed; ``residual`` holds the last residual norm."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
