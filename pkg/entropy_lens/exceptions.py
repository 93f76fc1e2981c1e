"""
Exception hierarchy for entropy_lens.

Library code raises these; only the command-line entry point turns them
into exit codes.
"""

from typing import Any, Optional, Sequence, Tuple


class EntropyLensError(Exception):
    """Base class for every error raised by the package."""


class ShapeError(EntropyLensError):
    """Raised when array dimensions do not line up."""

    def __init__(self, message: str, shapes: Sequence[Tuple[int, ...]] = ()):
        self.shapes = tuple(tuple(s) for s in shapes)
        if self.shapes:
            message = f"{message} (shapes: {', '.join(str(s) for s in self.shapes)})"
        super().__init__(message)


class ConfigError(EntropyLensError):
    """Raised for invalid hyperparameters or configuration documents."""


class ValidationError(EntropyLensError):
    """Raised when concept activations leave the unit interval."""

    def __init__(self, message: str, concept: Optional[str] = None,
                 row: Optional[int] = None, column: Optional[int] = None):
        self.concept = concept
        self.row = row
        self.column = column
        super().__init__(message)


class DatasetError(EntropyLensError):
    """Raised for malformed dataset files or target encodings."""

    def __init__(self, message: str, row: Optional[int] = None, column: Any = None):
        self.row = row
        self.column = column
        super().__init__(message)


class TrainingError(EntropyLensError):
    """Raised when optimization diverges."""

    def __init__(self, message: str, epoch: Optional[int] = None, **diagnostics: float):
        self.epoch = epoch
        self.diagnostics = diagnostics
        if epoch is not None:
            details = ", ".join(f"{k}={v!r}" for k, v in diagnostics.items())
            message = f"{message} at epoch {epoch}" + (f" ({details})" if details else "")
        super().__init__(message)


class ExtractionError(EntropyLensError):
    """Raised when a truth table cannot produce a formula."""


class FormulaError(EntropyLensError):
    """Raised for formula width mismatches and parse failures."""


class MetricError(EntropyLensError):
    """Raised when a metric cannot be computed on the given data."""
