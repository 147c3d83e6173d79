"""
Exception hierarchy for the device classification pipeline.

Every error raised on purpose by the library derives from FlowclassError so that
management commands and the REST layer can translate them in one place.
"""


class FlowclassError(Exception):
    """Base class for all pipeline errors."""

    code = 'FLOWCLASS_ERROR'


class MacAddressError(FlowclassError, ValueError):
    """A MAC address could not be parsed."""

    code = 'INVALID_MAC'


class RecordMismatchError(FlowclassError, ValueError):
    """A packet record does not belong to the device it was classified for."""

    code = 'RECORD_MISMATCH'


class CaptureFormatError(FlowclassError):
    """The capture export header is missing a required column."""

    code = 'CAPTURE_FORMAT'

    def __init__(self, column: str, path=None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"Capture header is missing required column '{column}'{where}")


class ParameterError(FlowclassError, ValueError):
    """An operation received a parameter outside its valid range."""

    code = 'INVALID_PARAMETER'


class SchemaError(FlowclassError, KeyError):
    """A feature name is not part of the schema."""

    code = 'UNKNOWN_FEATURE'

    def __init__(self, name: str):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"Unknown feature name '{self.name}'"


class ShapeError(FlowclassError, ValueError):
    """Array dimensions are inconsistent with the operation or configuration."""

    code = 'SHAPE_MISMATCH'


class UsageError(FlowclassError, RuntimeError):
    """An API was called out of order (backward before forward, predict before fit)."""

    code = 'USAGE_ERROR'


class DataError(FlowclassError, ValueError):
    """Training or evaluation data violates a precondition."""

    code = 'DATA_ERROR'


class TrainingDivergenceError(FlowclassError, ArithmeticError):
    """The training loss became non-finite."""

    code = 'TRAINING_DIVERGED'

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"Training diverged at epoch {epoch} (loss={loss})")


class ConfigurationError(FlowclassError, ValueError):
    """A config, scenario, split or label-set file is malformed."""

    code = 'CONFIGURATION_ERROR'


class SplitValidationError(FlowclassError, ValueError):
    """A train/test split violates the unseen-device constraint."""

    code = 'INVALID_SPLIT'


class ModelFormatError(FlowclassError, ValueError):
    """A serialized model file cannot be read."""

    code = 'MODEL_FORMAT'
