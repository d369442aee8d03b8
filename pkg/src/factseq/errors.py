"""Exception types shared across the toolkit."""


class FactseqError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(FactseqError, ValueError):
    pass


class InvalidConfig(FactseqError, ValueError):
    pass


class InvalidSpec(FactseqError, ValueError):
    pass


class MalformedPair(FactseqError, ValueError):
    pass


class FormatError(FactseqError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(FactseqError, ArithmeticError):
    def __init__(self, message, pair_id=None):
        self.pair_id = pair_id
        if pair_id is not None:
            message = f"{message} (pair {pair_id!r})"
        super().__init__(message)


class PipelineError(FactseqError, RuntimeError):
    """A QAGS pipeline component failed; ``stage`` names which one."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage} failed: {cause}")
