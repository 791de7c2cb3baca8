"""Exception hierarchy shared across the package."""

from __future__ import annotations


class CopError(Exception):
    """Base class for all package errors."""


class EmptyInput(CopError):
    """Raised when a text operation receives blank input."""


class UnparsableSentence(CopError):
    """A sentence did not match the unified logic grammar."""

    def __init__(self, text: str, reason: str = ""):
        self.text = text
        self.reason = reason
        super().__init__(f"unparsable sentence: {text!r}" + (f" ({reason})" if reason else ""))


class UnparsedPremise(CopError):
    """One or more premises failed logic parsing during capture."""

    def __init__(self, premise_ids: list[str]):
        self.premise_ids = list(premise_ids)
        super().__init__(f"premises failed to parse: {', '.join(self.premise_ids)}")


class NoParsableLines(CopError):
    """A stage completion contained no line matching the edge grammar."""


class NoAnchors(CopError):
    """No fragment is relevant to the question (a valid pipeline outcome)."""


class StageFailure(CopError):
    """A pipeline stage produced unusable output after retries."""


class BackendError(CopError):
    """A completion backend failed after exhausting its retry policy."""

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        self.status = status
        self.body = body
        super().__init__(message)


class AuthError(BackendError):
    """The endpoint rejected the API key; never retried."""


class OracleError(CopError):
    """The scripted oracle backend was asked something it has no script for."""


class EmptyPool(CopError):
    """The distractor pool has no usable sentences."""


class MissingGold(CopError):
    """Gold annotations required for this operation are absent."""


class MismatchedElements(CopError):
    """Two rankings do not cover the same element set."""


class AllZeroFlows(CopError):
    """A flow vector has no positive mass and cannot be normalized."""


class MissingLabels(CopError):
    """A saliency record lacks the labels a metric requires."""

    def __init__(self, metric: str, record_id: str):
        self.metric = metric
        self.record_id = record_id
        super().__init__(f"metric {metric} needs labels missing from record {record_id!r}")


class InsufficientSamples(CopError):
    """A statistics group has fewer than two values."""
