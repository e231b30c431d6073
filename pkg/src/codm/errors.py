"""Shared exception taxonomy.

Gateway errors split into retryable transport failures and hard failures;
everything else maps onto one HTTP status in the API layer.
"""
from __future__ import annotations


class CodmError(Exception):
    """Base class for all errors raised by this package."""


# --- knowledge base ---

class SchemaError(CodmError):
    """A data file is missing a field or holds the wrong type."""

    def __init__(self, file: str, field: str, message: str):
        self.file = file
        self.field = field
        super().__init__(f"{file}: field '{field}': {message}")


class DuplicateIdError(CodmError):
    def __init__(self, kind: str, id: str, file: str):
        self.id = id
        super().__init__(f"{file}: duplicate {kind} id '{id}'")


class UnknownSettingError(CodmError):
    pass


class EmptyCorpusError(CodmError):
    pass


# --- dice and tables ---

class ParseError(CodmError):
    """Dice-notation syntax or range error, with the byte offset it occurred at."""

    def __init__(self, message: str, offset: int, expected: str):
        self.offset = offset
        self.expected = expected
        super().__init__(f"{message} at offset {offset} (expected {expected})")


class EmptyTableError(CodmError):
    pass


class UnresolvedMonsterError(CodmError):
    def __init__(self, monster_id: str):
        self.monster_id = monster_id
        super().__init__(f"monster id '{monster_id}' does not resolve against the knowledge base")


# --- prompts and profiles ---

class UnknownKindError(CodmError):
    pass


class ProfileMismatchError(CodmError):
    pass


# --- gateway ---

class GatewayError(CodmError):
    """Base for provider-side failures. `retryable` drives the retry policy."""

    retryable = False

    def __init__(self, message: str, *, attempts: int = 0):
        self.attempts = attempts
        super().__init__(message)


class AuthError(GatewayError):
    retryable = False


class RateLimitError(GatewayError):
    retryable = True

    def __init__(self, message: str, *, retry_after: float | None = None, attempts: int = 0):
        super().__init__(message, attempts=attempts)
        self.retry_after = retry_after


class TimeoutError(GatewayError):  # noqa: A001 - mirrors the documented error name
    retryable = True


class ProviderError(GatewayError):
    """Opaque upstream failure. 5xx-style failures are retryable, content
    rejections are not."""

    def __init__(self, message: str, *, retryable: bool = True, attempts: int = 0):
        super().__init__(message, attempts=attempts)
        self.retryable = retryable


# --- sessions ---

class UnknownEncounterError(CodmError):
    pass


class UnknownThreadError(CodmError):
    pass


class UnknownGenerationError(CodmError):
    pass


class NoSummaryError(CodmError):
    pass


class ThreadBusyError(CodmError):
    pass


class ToolCommandError(CodmError):
    """Bot-style tool commands are not supported inside threads; the caller
    gets this notice instead of a hallucinated tool result."""


class DuplicateFeedbackError(CodmError):
    pass


class ConfigError(CodmError):
    pass
