"""Exception taxonomy shared across the toolkit.

Two families matter to callers (and to the CLI exit-code mapping):
``ValidationError`` for bad inputs/configuration and ``BackendError`` for
failures of a pluggable backend (replay store, vector file, remote service).
Plain ``OSError`` is left alone and signals I/O trouble.
"""

from __future__ import annotations


class SsikitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SsikitError):
    """Input, file-format, or configuration problem."""


class BackendError(SsikitError):
    """A generator or embedding backend failed or lacks requested data."""


class MalformedPair(ValidationError):
    """A state-update fragment that cannot be split into slot and value."""

    def __init__(self, fragment: str):
        self.fragment = fragment
        super().__init__(f"malformed slot-value pair: {fragment!r}")


class CorpusFormatError(ValidationError):
    """A line-delimited input file violates its record schema."""

    def __init__(self, path, line_no: int, reason: str):
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{path}:{line_no}: {reason}")


class SchemaValidationError(ValidationError):
    """A schema or report file violates a structural invariant."""

    def __init__(self, field_path: str, reason: str):
        self.field_path = field_path
        self.reason = reason
        super().__init__(f"{field_path}: {reason}")


class DegenerateVector(ValidationError):
    """A zero-norm vector where a direction is required."""


class EmptyCluster(ValidationError):
    """A cluster operation received no members."""


class EmptyAnnotations(ValidationError):
    """An annotation metric was requested over zero items."""


class MissingReplay(BackendError):
    """The replay store has no entry for the requested turn."""


class MissingEmbedding(BackendError):
    """The vector file has no entry for the requested text."""


class BackendUnavailable(BackendError):
    """A remote backend timed out, refused, or answered non-success."""


class DimMismatch(BackendError):
    """A backend returned vectors of inconsistent dimension."""
