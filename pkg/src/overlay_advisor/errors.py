from __future__ import annotations


class OverlayAdvisorError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(OverlayAdvisorError):
    """Malformed input document; carries the 1-based line (or row) number."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(OverlayAdvisorError):
    pass


class ResourceOverflowError(OverlayAdvisorError):
    """A resource count exceeded 2**63; the configuration is absurd."""


class InsufficientDataError(OverlayAdvisorError):
    pass
