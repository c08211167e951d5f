"""Exception hierarchy shared across the package."""


class PNMFError(Exception):
    """Base class for errors raised by pnmf."""


class ValidationError(PNMFError, ValueError):
    """Input violates a documented precondition (non-finite, negative, wrong shape)."""


class EmptyInputError(ValidationError):
    """An operation that needs at least one sample received none."""


class DegenerateInputError(ValidationError):
    """Input is well-formed but degenerate for the requested statistic (e.g. constant series)."""


class ConvergenceError(PNMFError, RuntimeError):
    """An iterative routine hit its iteration cap before converging."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InputFormatError(PNMFError):
    """A file could not be parsed; ``line`` is the 1-based line number when known."""

    def __init__(self, message, path=None, line=None):
        where = "" if path is None else f"{path}:" + ("" if line is None else f"{line}:")
        super().__init__(f"{where} {message}" if where else message)
        self.path = path
        self.line = line
