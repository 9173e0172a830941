"""Exception types shared across the package."""


class PlanforgeError(Exception):
    """Base class for all planforge errors."""


class ValidationError(PlanforgeError):
    """Input violates a documented precondition or invariant."""


class ParseError(PlanforgeError):
    """A file could not be parsed; carries the offending line when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(PlanforgeError):
    """A numeric computation produced non-finite or ill-conditioned values."""


class CheckpointError(PlanforgeError):
    """A checkpoint is corrupt, truncated, or inconsistent with its manifest."""


class ConfigMismatchError(CheckpointError):
    """Checkpoint was written under a different model configuration."""
