"""Exception hierarchy for the cdi package.

Errors fall into three families that the CLI maps onto exit codes:
validation errors (bad arguments or graph preconditions), data errors
(malformed documents or model responses), and provider errors (network,
credentials, exhausted fixtures).
"""

from __future__ import annotations


class CdiError(Exception):
    """Base class for all cdi errors."""


# --- validation / usage ------------------------------------------------------


class InvalidPartitionError(CdiError):
    """A bipartition references vertices that are not in the graph."""


class UnknownVertexError(CdiError):
    """A vertex id (e.g. a priority id) is not declared in the graph."""


class TooLargeError(CdiError):
    """The graph exceeds the exact-enumeration vertex limit."""


class InvalidParameterError(CdiError):
    """A solver or config parameter is out of its legal range."""


class EnsembleMismatchError(CdiError):
    """Ensemble samples do not share the same vertex set."""


class InsufficientSamplesError(CdiError):
    """Too few samples for the requested ensemble operation."""


# --- data / parsing ----------------------------------------------------------


class SchemaError(CdiError):
    """A JSON document violates the graph or report schema.

    ``field`` names the offending field when known.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class InvalidRatingError(CdiError):
    """A consistency rating is outside the 0..10 scale or not an integer."""


class UnparseableResponseError(CdiError):
    """A model response contains no bracketed edge list at all."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class ResponseParseError(CdiError):
    """A bracketed edge list was found but is malformed.

    ``offset`` is the byte offset of the offending span in the raw response.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class VocabularyError(CdiError):
    """An edge list references a label outside the proposition set."""

    def __init__(self, label: str):
        super().__init__(f"unknown proposition label {label!r}")
        self.label = label


# --- provider / pipeline -----------------------------------------------------


class ProviderError(CdiError):
    """The completion provider failed: network, credentials, or fixtures."""


class PipelineFailureError(CdiError):
    """Every sample in a prompt job failed; diagnostics carry the details."""

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = tuple(diagnostics or ())
