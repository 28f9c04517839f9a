"""Exception types raised across the package."""


class LpmcError(Exception):
    """Base class for package errors."""


class InvalidBitWidthsError(LpmcError, ValueError):
    pass


class InfeasibleMomentsError(LpmcError, ValueError):
    """Requested (mean, variance) cannot be produced by the three-point sampler."""


class NotPSDError(LpmcError, ValueError):
    pass


class DimensionMismatchError(LpmcError, ValueError):
    pass


class EmptySamplesError(LpmcError, ValueError):
    pass


class TooFewSamplesError(LpmcError, ValueError):
    pass


class GridMismatchError(LpmcError, ValueError):
    pass


class IdxFormatError(LpmcError, ValueError):
    pass


class BadMagicError(IdxFormatError):
    pass


class TruncatedFileError(IdxFormatError):
    pass


class CountMismatchError(IdxFormatError):
    pass


class ConfigError(LpmcError, ValueError):
    """Config could not be parsed or failed validation.

    ``path`` holds the dotted location of the offending field when known.
    """

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class MissingMetricError(LpmcError, KeyError):
    pass
