"""Exception types shared across the package."""


class UlcaError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(UlcaError):
    """A dataset file or upload could not be parsed."""


class DimensionMismatchError(UlcaError):
    """Shapes of the supplied arrays are inconsistent."""


class NonFiniteInputError(UlcaError):
    """Input data contains NaN or infinite values."""


class EmptyGroupError(UlcaError):
    """A group label in 1..c has no member rows."""


class EigenFailureError(UlcaError):
    """Eigendecomposition did not converge."""


class ZeroVectorError(UlcaError):
    """A direction vector with zero norm was supplied."""


class NonPositiveAreaError(UlcaError):
    """Ellipse areas must be strictly positive."""


class UnknownSnapshotError(UlcaError):
    """Requested snapshot name does not exist."""


class DuplicateNameError(UlcaError):
    """Snapshot name already exists and overwrite was not requested."""
