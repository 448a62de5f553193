"""Exception types shared across the package."""


class CmflowError(Exception):
    """Base class for package errors."""


class GridError(CmflowError):
    """Invalid grid construction or a field/grid mismatch."""


class ConvexityError(CmflowError):
    """An operation required a uniformly convex body and did not get one."""


class AdmissibilityError(CmflowError):
    """The anisotropy fails the structural hypothesis for the solve."""


class ConfigError(CmflowError):
    """A run configuration could not be parsed or validated."""


class FlowAbort(CmflowError):
    """The time integration had to stop.

    reason is one of "dt_min_underrun", "j_increase", "convexity_lost".
    The trace accumulated so far is attached for post-mortem output.
    """

    def __init__(self, reason, message, trace=None):
        super().__init__(message)
        self.reason = reason
        self.trace = trace
