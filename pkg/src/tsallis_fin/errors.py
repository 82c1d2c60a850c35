"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(ValueError):
    """Tensor shapes are incompatible."""


class GraphStateError(RuntimeError):
    """Backward was requested without a recorded forward pass."""


class ConfigError(ValueError):
    """A configuration is invalid or violates a precondition."""


class TrainingFailure(RuntimeError):
    """Training diverged. ``history`` holds the per-epoch record up to the failure."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class ModelFileError(ValueError):
    """A model file is corrupt, truncated or otherwise unparseable."""


class VersionError(ModelFileError):
    """A model file carries an unsupported format version."""


class DimensionError(ModelFileError):
    """Layer dimensions in a model file do not chain."""


class SchemaError(ValueError):
    """A data file lacks required columns or cannot be parsed."""


class InvariantViolation(RuntimeError):
    """A run produced a result that breaks a comparison invariant."""
