"""Exception types shared across the package."""


class TvcmError(Exception):
    """Base class for all package errors."""


class DomainError(TvcmError):
    """An argument is outside the mathematical domain of an operation."""


class EtaOverflowError(TvcmError):
    """The linear predictor overflowed the exponential inverse link.

    Signals a divergent model state rather than a recoverable data issue.
    """


class FitError(TvcmError):
    """An iterative fit failed to converge or diverged."""


class ConfigError(TvcmError):
    """Invalid configuration detected before any data work started."""


class DataError(TvcmError):
    """Data ingestion or validation failure; message carries coordinates."""


class ModelFormatError(TvcmError):
    """A model file is unreadable, has a bad schema, or the wrong version."""
