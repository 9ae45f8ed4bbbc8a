"""Exception types shared across the toolkit.

Everything raised on bad data or bad configuration derives from
``ToolkitError`` so the CLI can map it to a data/validation exit code,
distinct from usage errors.
"""


class ToolkitError(Exception):
    """Base class for data and validation errors raised by this package."""


class BadMagicError(ToolkitError):
    """Input stream does not start with the embedding-file magic bytes."""


class UnsupportedVersionError(ToolkitError):
    """Embedding file declares a format version this reader cannot parse."""


class TruncatedPayloadError(ToolkitError):
    """Embedding file ended before a declared field was complete."""


class InvariantViolationError(ToolkitError):
    """Structurally parseable data that violates a documented invariant."""


class ZeroVectorError(ToolkitError):
    """Cosine distance requested against an all-zero vector."""


class EmptyInputError(ToolkitError):
    """An operation that needs at least one element got an empty input."""


class MixedProvenanceError(ToolkitError):
    """Sentence representations with differing layer or pooling source."""


class DegenerateSystemError(ToolkitError):
    """Least-squares normal system is singular at ridge strength zero."""

    def __init__(self, message: str, rank: int):
        super().__init__(f"{message} (rank {rank})")
        self.rank = rank


class ConstantInputError(ToolkitError):
    """Correlation requested on a series with zero variance."""
