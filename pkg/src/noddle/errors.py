"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures to process
status without inspecting types one by one.
"""


class NoddleError(Exception):
    exit_code = 1
    code = "ERROR"


class ConfigError(NoddleError, ValueError):
    exit_code = 2
    code = "CONFIG_ERROR"


class DataError(NoddleError):
    exit_code = 3
    code = "DATA_ERROR"


class GraphFormatError(DataError, ValueError):
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class EmptyGraphError(DataError, ValueError):
    pass


class InvalidEdgeError(DataError, ValueError):
    pass


class DatasetError(DataError):
    pass


class NumericalError(NoddleError, ArithmeticError):
    exit_code = 4
    code = "NUMERICAL_ERROR"


class ContractError(NoddleError, ValueError):
    """Caller violated a shape or width precondition."""

    exit_code = 3
    code = "CONTRACT_ERROR"


class DegenerateDistributionError(NoddleError, ValueError):
    """All weights are zero, so no outcome can be drawn."""

    exit_code = 4
    code = "NUMERICAL_ERROR"


class UndefinedAUCError(DataError, ValueError):
    """AUC needs at least one positive and one negative."""
