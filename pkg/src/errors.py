"""Exceptions raised across epsilon-kit.

Every error is a ValueError so callers that only care about bad input can
catch that; report states such as an uncertified formula are plain values,
not exceptions.
"""


class EpsKitError(ValueError):
    """Base class for all epsilon-kit errors."""


class OppositeInfinities(EpsKitError):
    """(+inf) + (-inf) was requested."""


class DimensionMismatch(EpsKitError):
    """A point or operand has the wrong dimension."""

    def __init__(self, expected, got, what="point"):
        super().__init__(f"Expected {what} of dimension {expected}, got {got}")
        self.expected = expected
        self.got = got


class WindowTooSmall(EpsKitError):
    """A supremum or infimum was reached on the boundary of the search window."""

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = [] if points is None else list(points)


class UnsupportedDomainShape(EpsKitError):
    """A regularity question was asked about a set outside the decidable vocabulary."""


class NotASolution(EpsKitError):
    """The supplied decision point does not attain the optimal value."""


class NotConvex(EpsKitError):
    """Sampled data failed the axis-wise convexity certificate."""


class ParseError(EpsKitError):
    """A scenario or AST file could not be parsed."""


class SchemaError(EpsKitError):
    """A scenario or AST document is missing fields or has bad values."""
