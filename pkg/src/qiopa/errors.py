"""Exception types shared across the package."""


class QiopaError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidModeError(QiopaError, ValueError):
    pass


class InvalidArgumentsError(QiopaError, ValueError):
    pass


class NotAStateError(QiopaError, ValueError):
    pass


class EmptySectorError(QiopaError):
    pass


class UnsupportedConfigurationError(QiopaError):
    pass


class ResourceLimitError(QiopaError):
    pass


class InternalConsistencyError(QiopaError):
    pass


class InsufficientStatisticsError(QiopaError):
    """Raised when a count ratio has an empty denominator.

    The raw counts are kept on the exception so callers can still log them.
    """

    def __init__(self, message, signal=0, noise=0):
        super().__init__(message)
        self.signal = signal
        self.noise = noise


class AccuracyWarning(UserWarning):
    pass
