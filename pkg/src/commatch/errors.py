"""Exception types shared across the package."""


class CommatchError(Exception):
    """Base class for all package errors."""


class ParameterError(CommatchError, ValueError):
    """A numeric parameter is outside its admissible range."""


class DimensionError(CommatchError, ValueError):
    """Matrix or vector shapes do not agree."""


class CapacityError(CommatchError, ValueError):
    """A factorial-cost operation was asked for a size above its cap."""


class ParseError(CommatchError, ValueError):
    """A data file could not be parsed; carries the offending line number."""

    def __init__(self, message, path=None, line_no=None):
        self.path = path
        self.line_no = line_no
        where = ""
        if path is not None:
            where = f"{path}:"
        if line_no is not None:
            where += f"{line_no}: "
        super().__init__(where + message)


class ConfigError(CommatchError, ValueError):
    """An experiment configuration is invalid or incomplete."""


class NumericError(CommatchError, RuntimeError):
    """A non-finite value appeared mid-solve; carries the trace so far."""

    def __init__(self, message, trace=None):
        self.trace = trace
        super().__init__(message)
