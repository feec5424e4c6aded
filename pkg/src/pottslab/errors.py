"""Exception hierarchy for pottslab."""


class PottsError(Exception):
    """Base class for all package errors."""


class DimensionError(PottsError, ValueError):
    """Parameter, tapering or statistic dimensions do not match the grid."""


class EnumerationCapError(PottsError):
    """Exhaustive enumeration would exceed the configured state cap."""


class DegenerateDataError(PottsError):
    """Data or a sample batch carries no information about some parameter."""


class ConvergenceError(PottsError):
    """An optimizer failed to converge.

    The best iterate reached is kept on ``best`` so callers can inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SteppingStallError(PottsError):
    """No admissible step length was found in the partial stepping search."""


class TauSearchError(PottsError):
    """The tapering search could not start from the requested tau."""
