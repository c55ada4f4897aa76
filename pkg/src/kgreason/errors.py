"""Exception types shared across the package.

Soft conditions (fan-out truncation, unparsable LM output) are carried as
flags on result objects rather than raised; everything here signals a
contract violation the caller must handle.
"""


class KGReasonError(Exception):
    """Base class for all package errors."""


class MalformedRecord(KGReasonError):
    """A line of an input file violates the record format."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class UnknownEntity(KGReasonError):
    """An entity identifier is not in the graph vocabulary."""


class UnknownRelation(KGReasonError):
    """A relation identifier is not in the graph vocabulary."""


class DimensionMismatch(KGReasonError):
    """Tensor or vocabulary shapes disagree with the model parameters."""


class NotNormalized(KGReasonError):
    """A vector that must be a probability distribution is not."""


class EmptyDataset(KGReasonError):
    """No usable training instances remain after filtering."""


class EmptyBatch(KGReasonError):
    """An aggregate over zero items was requested."""


class UnparsablePath(KGReasonError):
    """No token of a path string matches any known relation."""


class LMUnavailable(KGReasonError):
    """The language-model backend could not produce a response."""


class ConfigError(KGReasonError):
    """A configuration file is missing, inconsistent, or out of range."""
