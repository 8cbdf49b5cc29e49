"""Exception types raised by the package."""


class HulmError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(HulmError, ValueError):
    """Shapes, indices or hyperparameters are inconsistent."""


class NumericRangeError(HulmError, ArithmeticError):
    """A potential or message became non-finite."""


class DivergedError(HulmError, ArithmeticError):
    """Training produced a non-finite objective."""

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"objective became non-finite at epoch {epoch}")


class BudgetError(HulmError):
    """Brute-force enumeration would exceed the configured state budget."""


class ParseError(HulmError, ValueError):
    """A dataset or model file could not be parsed."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
