"""Exception types raised across the package."""


class VolNMFError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(VolNMFError, ValueError):
    pass


class ConvergenceFailure(VolNMFError, RuntimeError):
    pass


class DegenerateScale(VolNMFError, ValueError):
    pass


class ShapeMismatch(VolNMFError, ValueError):
    pass


class RankDeficient(VolNMFError, ValueError):
    pass


class DegenerateRays(VolNMFError, ValueError):
    pass


class SSCConstructionFailed(VolNMFError, ValueError):
    pass


class RejectionStall(VolNMFError, RuntimeError):
    pass


class ZeroColumn(VolNMFError, ValueError):
    pass


class ColumnCollapse(VolNMFError, ValueError):
    pass


class ParseError(VolNMFError, ValueError):
    """CSV content could not be parsed; carries the 1-based line and column."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column


class RaggedRows(ParseError):
    pass
