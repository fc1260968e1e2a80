"""Exception types shared across the package."""
from __future__ import annotations



class ParameterError(ValueError):
    """An argument or configuration value violates its contract.

    ``field`` names the offending parameter when there is a single culprit.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class FrameError(RuntimeError):
    """A received frame is too short or could not be located."""


class DegenerateChannelError(RuntimeError):
    """Channel estimate is too small to invert."""
