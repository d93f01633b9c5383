"""Exception types shared across the engine."""


class ModelFuzzError(Exception):
    """Base class for all engine errors."""


class ModelParseError(ModelFuzzError):
    """Raised when model JSON cannot be parsed; names the first offending field."""

    def __init__(self, field: str, detail: str):
        self.field = field
        self.detail = detail
        super().__init__(f"parse error at {field!r}: {detail}")


class InvalidModelError(ModelFuzzError):
    """Raised when an operation requires a valid model but the invariants fail."""

    def __init__(self, violations):
        self.violations = list(violations)
        rules = ", ".join(rule for rule, _ in self.violations)
        super().__init__(f"invalid model: {rules}")


class TensorFileError(ModelFuzzError):
    """Raised on a missing or corrupt tensor file; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class InsufficientDataError(ModelFuzzError):
    """Raised when a statistic needs more rows than the caller supplied."""


class MutationFailedError(ModelFuzzError):
    """Raised when the validity retry budget of a single mutation is exhausted."""


class PoolConstructionError(ModelFuzzError):
    """Raised when the seed pool cannot reach its target size within budget."""


class BackendUnavailableError(ModelFuzzError):
    """Raised when an execution backend cannot be spawned or handshaken."""


class HarnessDegradedError(ModelFuzzError):
    """Raised when every backend crashes during build on a valid model.

    Carries the differential record so the campaign can log the model and
    keep going.
    """

    def __init__(self, record):
        self.record = record
        super().__init__("all backends crashed in build phase")


class ConfigError(ModelFuzzError):
    """Raised for invalid campaign configuration values."""
