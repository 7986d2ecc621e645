"""Exception types shared across the package."""


class IctsError(Exception):
    """Base class for package errors."""


class InputError(IctsError):
    """Invalid data, configuration or argument values."""


class NumericalError(IctsError):
    """Numerical failure inside a filtering or sampling recursion."""

    def __init__(self, message, t=None, phi=None):
        super().__init__(message)
        self.t = t
        self.phi = phi


class DiagnosticError(IctsError):
    """A convergence diagnostic is undefined for the given samples."""


class NotConvergedError(IctsError):
    """The sampling protocol exhausted its budget before converging."""


class AnalysisError(IctsError):
    """A posterior summary is undefined for the given inputs."""
