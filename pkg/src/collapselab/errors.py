"""Exception types shared across the package."""


class CollapseLabError(Exception):
    """Base class for all package errors."""


class PointOutsidePatchError(CollapseLabError):
    pass


class NonSPDMetricError(CollapseLabError):
    """A metric evaluator produced a non-symmetric-positive-definite matrix."""


class DegeneratePlaneError(CollapseLabError):
    pass


class DimensionMismatchError(CollapseLabError):
    pass


class DisconnectedGraphError(CollapseLabError):
    pass


class RankDropError(CollapseLabError):
    """Vertical distribution lost rank at a point of a declared-regular model."""


class NonHorizontalError(CollapseLabError):
    pass


class SizeTooLargeError(CollapseLabError):
    pass


class InsufficientRowsError(CollapseLabError):
    pass


class StrataNotIsolatedError(CollapseLabError):
    pass


class HypothesisViolatedError(CollapseLabError):
    """The normal-in-fiber hypothesis failed; deformation is undefined."""


class KernelMembershipError(CollapseLabError):
    pass


class ConstraintViolationError(CollapseLabError):
    pass


class ConfigError(CollapseLabError):
    pass
