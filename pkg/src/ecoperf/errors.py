"""Domain exceptions. The CLI maps any EcoperfError to exit code 1."""

from __future__ import annotations


class EcoperfError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(EcoperfError):
    """An event line failed parsing or validation.

    ``reason`` is one of ``missing_field``, ``bad_timestamp``,
    ``bad_repo_name``, ``bad_json`` or ``bad_value``; ``field`` names the
    offending field when one can be named.
    """

    def __init__(self, reason: str, field: str = "", message: str | None = None):
        self.reason = reason
        self.field = field
        super().__init__(message or (f"{reason}: {field}" if field else reason))


class ManifestCorruptError(EcoperfError):
    """Store manifest disagrees with the partition files on disk."""


class KindError(EcoperfError):
    """A graph of the wrong kind was passed to an operation."""


class EmptyGraphError(EcoperfError):
    """Operation requires a non-empty graph."""


class UnknownNodeError(EcoperfError):
    """Node name not present in the graph."""


class SameNodeError(EcoperfError):
    """Operation requires two distinct nodes."""


class TooFewEdgesError(EcoperfError):
    """Graph has too few edges for the requested split."""


class NoAbsentEdgesError(EcoperfError):
    """No node pair is absent from the graph; AUC sampling is impossible."""


class NothingToMaskError(EcoperfError):
    """No observed cells are available for masking."""


class ZeroVarianceError(EcoperfError):
    """Held-out ground truth has no variance; normalized metrics undefined."""


class EmptyMatrixError(EcoperfError):
    """Metric matrix has no rows or columns."""


class SingleClassError(EcoperfError):
    """Labeled data contains only one class.

    When raised by evaluation, ``report`` carries the threshold metrics that
    remain well defined without AUC.
    """

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class DegenerateDataError(EcoperfError):
    """All training rows are identical; nothing can be learned."""


class SpecValidationError(EcoperfError):
    """A benchmark spec violates the six-core-element contract.

    ``violations`` lists every broken rule at once.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class UnknownSpecError(EcoperfError):
    """No registered benchmark spec with the given id."""


class ChecksumMismatchError(EcoperfError):
    """Dataset file content does not match the checksum declared in the spec."""


class AdapterMissingError(EcoperfError):
    """No model adapter registered under the requested name for this task type."""


class TaskNotImplementedError(EcoperfError):
    """The task is in the catalog but has no runnable harness."""


class BenchmarkRunError(EcoperfError):
    """A harness error, wrapped with the benchmark spec context."""
