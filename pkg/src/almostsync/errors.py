"""Exception hierarchy. Every error is a ``ValueError`` so callers can catch broadly."""


class AlmostSyncError(ValueError):
    """Base class for all validation failures raised by the package."""


class NonHermitian(AlmostSyncError):
    pass


class NonFinite(AlmostSyncError):
    pass


class DimensionMismatch(AlmostSyncError):
    pass


class NotNormalized(AlmostSyncError):
    pass


class NotIsometry(AlmostSyncError):
    pass


class NotDensity(AlmostSyncError):
    pass


class NotPSD(AlmostSyncError):
    pass


class NotMeasurement(AlmostSyncError):
    pass


class NotSquare(AlmostSyncError):
    pass


class NotProjective(AlmostSyncError):
    pass


class NotBinary(AlmostSyncError):
    pass


class LabelMismatch(AlmostSyncError):
    pass


class EmptyDiagonal(AlmostSyncError):
    pass


class UnknownName(AlmostSyncError):
    pass


class NotProjectionGame(AlmostSyncError):
    pass


class OverlappingSets(AlmostSyncError):
    pass


class SingularRho(AlmostSyncError):
    pass


class DimensionOverflow(AlmostSyncError):
    pass


class InsufficientData(AlmostSyncError):
    pass


class NonPositive(AlmostSyncError):
    pass


class InvalidDistribution(AlmostSyncError):
    pass
