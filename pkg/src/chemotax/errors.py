"""Exception types shared across the package."""


class ChemotaxError(Exception):
    """Base class for all package errors."""


class InvalidField(ChemotaxError, ValueError):
    """A grid function holds non-finite values or violates a sign requirement."""


class InvalidData(ChemotaxError, ValueError):
    """Initial data or derived quantities that cannot be constructed."""


class PreconditionViolation(ChemotaxError, ValueError):
    """An operation was called outside the parameter regime it is defined for."""


class SolveFailure(ChemotaxError, RuntimeError):
    """A linear solve did not meet its residual contract."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StepRejected(ChemotaxError):
    """A time step violated positivity or the drift CFL bound; retry with smaller dt."""


class FitUndefined(ChemotaxError, ValueError):
    """Exponential fit impossible because the series reached zero."""


class EstimateFailure(ChemotaxError, RuntimeError):
    """All optimizer starts collapsed to a degenerate candidate."""


class ConfigError(ChemotaxError, ValueError):
    """Malformed run configuration; carries the offending line and column."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}, column {column or 1}: "
        super().__init__(loc + message)
        self.line = line
        self.column = column
