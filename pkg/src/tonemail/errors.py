"""Error hierarchy shared by every layer.

Each error carries a stable ``code`` used by the HTTP layer to build
structured ``{code, message, details}`` bodies and by the CLI to pick
exit codes.
"""

from __future__ import annotations

from typing import Any


class ToneMailError(Exception):
    """Base class for all errors raised by this package."""

    code = "internal"

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ValidationError(ToneMailError):
    """Caller-supplied data violates a documented invariant."""

    code = "validation"


class ConfigError(ToneMailError):
    """Configuration is missing or inconsistent (checked before any work runs)."""

    code = "config"


class GatewayError(ToneMailError):
    """The LLM provider was unreachable or refused the request."""

    code = "gateway"


class SchemaError(ToneMailError):
    """Agent output was still invalid after the retry budget was spent.

    ``last_raw`` keeps the final raw model output for debugging and
    ``attempts`` records how many completions were made in total.
    """

    code = "schema"

    def __init__(self, message: str, last_raw: str = "", attempts: int = 0,
                 details: dict[str, Any] | None = None):
        super().__init__(message, details)
        self.last_raw = last_raw
        self.attempts = attempts


class SegmentationError(ToneMailError):
    """Unit-extractor output could not be repaired into a partition."""

    code = "segmentation"


class ScopeError(ToneMailError):
    """A rewrite agent proposed edits outside the spans it was allowed to touch."""

    code = "scope"


class NoOpEditError(ToneMailError):
    """An edit-analysis request where original and revised text are equal."""

    code = "noop_edit"


class StorageError(ToneMailError):
    """The durable store could not be read or written."""

    code = "storage"


class NotFoundError(ToneMailError):
    """A referenced anchor, record, session, or intent does not exist."""

    code = "not_found"


class StateError(ToneMailError):
    """A session operation was called in a state that does not allow it."""

    code = "state"
