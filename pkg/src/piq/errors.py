"""Exception hierarchy.

The CLI maps these onto exit codes: `DataError` -> 3, numeric failures
(`ConvergenceError`, `BudgetExceededError`, `NumericalError`) -> 4.
"""


class PiqError(Exception):
    """Base class for all errors raised by the package."""


class DimensionError(PiqError, ValueError):
    pass


class NonFiniteError(PiqError, ValueError):
    pass


class DataError(PiqError, ValueError):
    """Malformed input data (CSV cells, response labels, ...)."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        if row is not None or column is not None:
            message = f"{message} (row {row}, column {column})"
        super().__init__(message)


class ConfigError(PiqError, ValueError):
    pass


class UnsupportedError(PiqError, NotImplementedError):
    pass


class NumericalError(PiqError, ArithmeticError):
    pass


class ConvergenceError(NumericalError):
    pass


class BudgetExceededError(NumericalError):
    """An exhaustive enumeration would exceed its combinatorial budget."""
