"""Exception types shared across the package."""


class DrkmError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(DrkmError, ValueError):
    """Malformed numerical input: shape mismatch, non-finite values, bad domain."""


class UnsupportedGradientError(DrkmError):
    """An input gradient was requested for a kernel that does not provide one."""


class NumericalFailureError(DrkmError):
    """A non-finite value or solver breakdown occurred during evaluation.

    ``term`` names the objective term or solve that produced the failure,
    when known.
    """

    def __init__(self, message: str, term: str | None = None):
        super().__init__(message)
        self.term = term


class UnderflowError(NumericalFailureError):
    """Kernel smoother weights underflowed; a larger bandwidth is needed."""


class ConfigError(DrkmError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class DataError(DrkmError):
    """Dataset or model file could not be loaded or failed validation."""


class RankDeficiencyWarning(UserWarning):
    """The matrix projected onto the Stiefel manifold was rank deficient.

    The projection is then non-unique; null directions are completed
    deterministically but carry no information.
    """
