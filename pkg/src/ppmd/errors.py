"""Exception hierarchy shared across the package."""


class PpmdError(Exception):
    """Base class for all errors raised by this package."""


class CsvParseError(PpmdError):
    """Malformed CSV input (ragged rows, unreadable cells)."""


class SchemaError(PpmdError):
    """Schema violation: unknown columns, bad kinds, width mismatches."""


class IngestionError(PpmdError):
    """Dataset cannot be ingested (e.g. a column with no usable values)."""


class SplitError(PpmdError):
    """Train/test split would be empty or is otherwise invalid."""


class EncodingError(PpmdError):
    """Categorical encoding failure (unseen level with frozen levels)."""


class PartitionError(PpmdError):
    """Invalid sensitive/non-sensitive partition request."""


class IntegrityError(PpmdError):
    """Provenance or alignment mismatch during recombination."""


class TrainingError(PpmdError):
    """Degenerate training input (single class, class with no rows, ...)."""


class DivergenceError(TrainingError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class UndefinedTestError(PpmdError):
    """Statistical test is undefined for the given input."""


class GridMismatchError(PpmdError):
    """Two reports do not cover the same comparison grid."""


class ServiceUnavailableError(PpmdError):
    """Protocol query arrived before the classification model was trained."""
