"""Exception hierarchy shared across the package."""

from __future__ import annotations


class AutoChecklistError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AutoChecklistError):
    """Invalid configuration: unknown names, conflicting options, bad values."""


class TemplateError(AutoChecklistError):
    """Template loading or rendering failure."""


class TransportError(AutoChecklistError):
    """LLM provider unreachable or failing after all retries."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ParseError(AutoChecklistError):
    """Structured output could not be recovered from a completion."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class GenerationError(AutoChecklistError):
    """Checklist generation failed or produced unusable output."""


class ScoringError(AutoChecklistError):
    """Scoring failed: no scoreable items, incomplete answers, etc."""


class RefinerError(AutoChecklistError):
    """A refiner stage failed or eliminated every item."""


class DatasetError(AutoChecklistError):
    """Dataset file unreadable, malformed, or missing required fields."""
