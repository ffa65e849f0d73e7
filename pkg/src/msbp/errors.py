"""Exception hierarchy shared across the toolkit.

Everything raised on bad model input derives from :class:`ModelError` so the
CLI can map it to a validation exit code; runtime conditions that the caller
is expected to handle get their own classes.
"""


class MsbpError(Exception):
    """Base class for all toolkit errors."""


class ModelError(MsbpError, ValueError):
    """Invalid model or scheme specification (maps to CLI exit code 2)."""


class NotEventuallyPositiveError(MsbpError):
    """phi1 never becomes positive on the search window [0, lam_max]."""


class InvalidScaleError(ModelError):
    """Offspring family leaves the probability simplex at this time scale."""

    def __init__(self, msg, required_gamma=None):
        super().__init__(msg)
        self.required_gamma = required_gamma


class LogDomainError(MsbpError):
    """Argument of the logarithmic mechanism correction is not positive."""


class CountOverflowError(MsbpError):
    """A population count exceeded the integer cap; replicate aborted."""


class SizeLimitError(MsbpError):
    """Input exceeds a documented size cap (e.g. transport solver n > 2048)."""


class ConditionFailError(MsbpError):
    """A contraction precondition fails; ``which`` names the condition."""

    def __init__(self, which, msg):
        super().__init__(msg)
        self.which = which


class InsufficientPointsError(MsbpError):
    """Too few usable points for a fit."""
