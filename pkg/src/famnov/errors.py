"""Exception types shared across the package."""


class FamnovError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(FamnovError, ValueError):
    """Operands have incompatible shapes or sizes."""


class ConfigurationError(FamnovError, ValueError):
    """A parameter or dataset violates an operation's requirements."""


class DecompositionError(FamnovError, ArithmeticError):
    """A matrix factorization failed even after regularization."""


class StateError(FamnovError, RuntimeError):
    """An operation was invoked before its required state was prepared."""


class ParseError(FamnovError, ValueError):
    """A file could not be parsed; the message names the offending location."""


class PipelineStageError(FamnovError, RuntimeError):
    """A pipeline stage failed; the message carries the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
