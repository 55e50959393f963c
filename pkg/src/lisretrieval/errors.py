"""Exception hierarchy shared by the retrieval modules and the CLI."""


class RetrievalError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(RetrievalError, ValueError):
    """Array shapes disagree.  ``axis`` names the offending dimension."""

    def __init__(self, message: str, axis: str | None = None):
        super().__init__(message)
        self.axis = axis


class ConfigError(RetrievalError, ValueError):
    """Invalid or infeasible configuration."""


class NumericalError(RetrievalError, ArithmeticError):
    """A numerical routine produced non-finite values or failed to factorize."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index
