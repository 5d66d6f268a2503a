"""Exception types raised by the toolkit."""


class MonocheckError(Exception):
    """Base class for all toolkit errors."""


class ContractError(MonocheckError, ValueError):
    """An input violates a documented contract (dimension mismatch, bad index, ...)."""


class PreconditionError(MonocheckError):
    """An operation's mathematical precondition does not hold for the input."""


class UnknownOperatorError(MonocheckError, KeyError):
    """Requested catalog entry does not exist."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown operator"


class GenerationError(MonocheckError, ValueError):
    pass


class EmptyGraphError(MonocheckError):
    """Sampling produced no graph points at all."""

    def __init__(self, message, domain_points=0, domain_hits=0):
        super().__init__(message)
        self.domain_points = domain_points
        self.domain_hits = domain_hits


class GraphFormatError(MonocheckError, ValueError):
    """A graph or path file could not be parsed."""

    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)
        self.line = line
        self.column = column


class GraphValidationError(GraphFormatError):
    """A well-formed file describes an inconsistent graph (e.g. wrong vector lengths)."""
