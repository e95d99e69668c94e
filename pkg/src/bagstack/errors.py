"""Exception types raised across the toolkit.

Everything derives from BagstackError (itself a ValueError) so callers can
catch broadly or precisely.
"""


class BagstackError(ValueError):
    """Base class for all toolkit errors."""


class SchemaError(BagstackError):
    """Malformed header or unknown file layout."""


class ParseError(BagstackError):
    """Unparseable cell value; carries the 1-based data row number."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class LabelConsistencyError(BagstackError):
    """More than one event indicator set on a single sample."""


class EmptyInputError(BagstackError):
    """Operation requires at least one row / sample / recording."""


class SplitInfeasibleError(BagstackError):
    """Subject-wise split cannot produce two non-empty sides."""


class ConfigError(BagstackError):
    """Invalid configuration value."""


class InvalidFeatureError(BagstackError):
    """NaN or infinite entries in a feature matrix."""


class ShapeError(BagstackError):
    """Dimension mismatch between arrays or against a trained model."""


class FoldError(BagstackError):
    """Cross-validation fold count incompatible with the data."""


class NoPositivesError(BagstackError):
    """Metric undefined: no event class has a valid positive sample."""


class InvalidScoreError(BagstackError):
    """NaN confidence score passed to a ranking metric."""
