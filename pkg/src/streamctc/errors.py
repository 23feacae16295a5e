"""Exception types shared across the package."""

from __future__ import annotations


class StreamCtcError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(StreamCtcError):
    """An input violates a documented precondition or invariant."""


class CapacityError(StreamCtcError):
    """A request exceeds a hard resource guard (e.g. oracle enumeration size)."""


class ParseError(StreamCtcError):
    """A file or stream is malformed. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
