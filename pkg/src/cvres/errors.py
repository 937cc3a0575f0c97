"""Exception types shared across the package."""


class CvresError(Exception):
    """Base class for all package errors."""


class UsageError(CvresError, ValueError):
    """Caller passed arguments outside an operation's contract."""


class ConfigurationError(CvresError, ValueError):
    """Inputs are individually valid but mutually inconsistent (e.g. cutoff mismatch)."""


class InsufficientCutoffError(UsageError):
    """The requested construction does not fit in the given Fock cutoff.

    Carries ``required_cutoff`` so callers can retry at a workable size.
    """

    def __init__(self, message: str, required_cutoff: int):
        super().__init__(message)
        self.required_cutoff = required_cutoff


class DegenerateParameterError(UsageError):
    """A protocol parameter sits at a degenerate boundary value."""


class BoundConsistencyError(CvresError):
    """A certified lower bound exceeded a certified upper bound beyond tolerance."""
