"""Exception hierarchy shared by all modules."""
from __future__ import annotations


class JetError(ValueError):
    """Base class for every error raised by jetvar."""


class UnsupportedFunctionError(JetError):
    pass


class DomainError(JetError):
    """Numeric evaluation left the domain of sqrt/log or divided by zero."""


class IncompletePointError(JetError):
    """A point does not carry a coordinate an expression needs."""


class OrderOverflowError(JetError):
    """An operator would raise the jet order past the cap of 3."""


class UnsupportedOrderError(JetError):
    """An operator was handed an object of an order it is not defined on."""


class DegreeError(JetError):
    pass


class WeightOverflowError(JetError):
    pass


class NotInvertibleError(JetError):
    pass


class IncompleteMapError(JetError):
    pass


class DegenerateFormError(JetError):
    pass


class PreconditionError(JetError):
    pass


class RegularityError(JetError):
    """A curve fails to be an immersion at a quadrature node."""


class OrientationError(JetError):
    pass


class ParseError(JetError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column
