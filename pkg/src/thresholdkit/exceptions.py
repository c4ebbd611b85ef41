"""
Error hierarchy for thresholdkit.

Data and format errors also derive from ValueError so callers that only
guard against invalid input keep working.
"""


class ThresholdKitError(Exception):
    """Base class for all thresholdkit errors."""


class ArgumentError(ThresholdKitError, ValueError):
    """An argument is outside its documented range."""


class CorpusFormatError(ThresholdKitError, ValueError):
    """A corpus line could not be parsed."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyCorpusError(ThresholdKitError, ValueError):
    """The corpus holds no documents."""


class ImpactFormatError(ThresholdKitError, ValueError):
    """An impact-exchange file violates the format."""


class ImpactRangeError(ImpactFormatError):
    """An impact value is outside [1, 65535]."""


class IndexFormatError(ThresholdKitError, ValueError):
    """An index container is malformed or truncated."""


class StoreFormatError(ThresholdKitError, ValueError):
    """A prefix store container is malformed or truncated."""


class StoreOrderingError(StoreFormatError):
    """Prefix entries violate the descending-total ordering."""


class ChecksumMismatchError(IndexFormatError, StoreFormatError):
    """The trailing checksum does not match the file contents."""


class StoreCompatibilityError(ThresholdKitError, ValueError):
    """A prefix store was built against a different index."""


class ContractViolationError(ThresholdKitError, ValueError):
    """A caller broke a documented precondition."""


class CatalogFormatError(ThresholdKitError, ValueError):
    """A catalog dump line could not be parsed."""
