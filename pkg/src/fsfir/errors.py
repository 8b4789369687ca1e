"""Exception and warning types raised by the package."""


class FsfirError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(FsfirError, ValueError):
    pass


class IncompatibleGridsError(FsfirError, ValueError):
    pass


class ShapeError(FsfirError, ValueError):
    pass


class InsufficientSamplesError(FsfirError, ValueError):
    pass


class RankDeficientError(FsfirError, ValueError):
    """Truncation level exceeds the numerical rank of the covariance operator."""


class UnsupportedResponseError(FsfirError, ValueError):
    pass


class TooManySlicesError(FsfirError, ValueError):
    pass


class IllConditionedKernelError(FsfirError, ValueError):
    pass


class SchemaError(FsfirError, ValueError):
    pass


class EmptyDatasetError(FsfirError, ValueError):
    pass


class DegenerateSpectrumWarning(UserWarning):
    """Leading eigenvalues of the target matrix are numerically degenerate."""
