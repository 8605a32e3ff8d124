"""Exception types shared across the package."""


class GogttError(Exception):
    """Base class for all package errors."""


class HandleMismatch(GogttError):
    """Operands belong to different group handles."""


class Undecided(GogttError):
    """The requested question has no implemented decision procedure
    for this combination of backends."""


class UnrepresentableGroup(GogttError):
    """A construction produced a group that does not fit any backend."""


class UnsupportedCollapse(GogttError):
    """A collapse would need a fundamental group outside the supported backends."""


class StepLimitExceeded(GogttError):
    """An iterative procedure hit its step budget without terminating."""


class IncreaseGuard(GogttError):
    """A valence-two homotopy was refused because it would increase the
    growth rate."""


class InversionFold(GogttError):
    """A fold would identify an edge with its own reversal."""


class ValidationError(GogttError):
    """Structural invariant violated."""
