"""Exception hierarchy shared by all modules."""


class QKDError(Exception):
    """Base class for every error raised by this package."""


class TruncationOverflowError(QKDError, ValueError):
    """A state does not fit in the requested Fock truncation.

    ``suggested_dim`` carries the smallest dimension that would fit, when known.
    """

    def __init__(self, message, suggested_dim=None):
        super().__init__(message)
        self.suggested_dim = suggested_dim


class WeightNormalizationError(QKDError, ValueError):
    pass


class PhysicalityError(QKDError, ValueError):
    """Covariance matrix violates the uncertainty relation (or a derived bound)."""


class DomainError(QKDError, ValueError):
    pass


class InsufficientDataError(QKDError, ValueError):
    pass


class DegenerateEstimateError(QKDError, ValueError):
    pass


class RecordFormatError(QKDError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line
