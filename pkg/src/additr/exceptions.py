"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when inputs contain non-finite values or violate a precondition."""


class DegenerateInputError(ValueError):
    """Raised when inputs are too degenerate to fit (e.g. too few distinct x)."""


class DataSchemaError(ValueError):
    """Raised when an input file does not match the expected schema."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to converge.

    Carries the last iterate in ``last_fit`` so callers can inspect it.
    """

    def __init__(self, message, last_fit=None):
        super().__init__(message)
        self.last_fit = last_fit


class PipelineStageError(RuntimeError):
    """Raised when a fitting stage fails; tags the failing stage by name."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
