"""Exception hierarchy shared by all modules."""


class DiagnosticsError(Exception):
    """Base class for errors raised by entropy_diagnostics."""


class DataError(DiagnosticsError):
    """Missing, malformed or inconsistent input files."""


class ConstraintError(DiagnosticsError, ValueError):
    """A precondition of an operation is violated (resolution, support, ranges)."""


class DomainError(ConstraintError):
    """A state left the open convex state domain on which fluxes are defined."""

    def __init__(self, message, point=None, location=None):
        super().__init__(message)
        self.point = point
        self.location = location
