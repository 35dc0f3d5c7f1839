class GfdmError(Exception):
    """Base class for library errors."""


class InvalidArgument(GfdmError, ValueError):
    pass


class SingularMatrixError(GfdmError):
    """Raised when a matrix is too ill-conditioned to invert."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class UnsupportedSizeError(GfdmError, ValueError):
    pass


class SpectralNullError(GfdmError, ZeroDivisionError):
    """Raised by zero-forcing equalization when the channel has a null."""

    def __init__(self, message, bin_index):
        super().__init__(message)
        self.bin_index = bin_index
