"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class LpplscanError(Exception):
    """Base class for all package errors."""


class ConfigError(LpplscanError):
    """Invalid configuration: bad grid/search/pattern parameters or config file."""


class DataError(LpplscanError):
    """Invalid or unusable input data: unreadable CSV, duplicate dates, empty slices."""


class NumericalError(LpplscanError):
    """Numerical failure: degenerate systems, no usable fit restarts."""


class DegenerateDesignError(NumericalError):
    """The linear design matrix of a fit is rank deficient."""


class StageError(LpplscanError):
    """A pipeline stage failed; carries the stage name, wraps the cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
