"""Exception hierarchy shared by every warpbench module."""
from typing import Any, Optional


class WarpbenchError(Exception):
    """Base class for all warpbench errors."""


class FormatError(WarpbenchError):
    """A file does not follow the expected binary layout (magic, version, checksum, shape)."""


class TruncationError(FormatError):
    """A file ended before the payload its header announced."""


class ConsistencyError(WarpbenchError):
    """Two inputs that must agree (e.g. image and label counts) do not."""


class InsufficientDataError(WarpbenchError):
    """A class does not hold enough samples for the requested operation."""

    def __init__(self, message: str, class_id: Optional[int] = None):
        super().__init__(message)
        self.class_id = class_id


class ParameterError(WarpbenchError, ValueError):
    """A parameter is outside its documented range."""


class DimensionError(WarpbenchError, ValueError):
    """Array shapes do not line up."""


class DivergenceError(WarpbenchError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, epoch: Optional[int] = None):
        super().__init__(message)
        self.epoch = epoch


class SolverError(WarpbenchError):
    """A linear system could not be solved reliably."""


class IoError(WarpbenchError, OSError):
    """Writing or reading an output artifact failed."""


class RunContextError(WarpbenchError):
    """An error raised inside a sweep cell, annotated with the cell it came from."""

    def __init__(self, cause: BaseException, **context: Any):
        details = ", ".join(f"{key}={value}" for key, value in context.items())
        super().__init__(f"{type(cause).__name__} in sweep cell ({details}): {cause}")
        self.cause = cause
        self.context = context
