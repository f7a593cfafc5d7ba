"""Exception hierarchy shared by every module of the package."""


class WeylTwistError(Exception):
    """Base class for all package errors."""


class DomainError(WeylTwistError, ValueError):
    """An elementary function was evaluated at (or across) its singular value."""


class SingularMetric(WeylTwistError):
    """A metric failed to be positive-definite or invertible at a point."""


class RankDeficient(WeylTwistError):
    """The differential of a map dropped rank (critical point)."""


class DimensionMismatch(WeylTwistError):
    pass


class NotHWC(WeylTwistError):
    """A map is not horizontally conformal where a check requires it."""


class DegenerateCurve(WeylTwistError):
    pass


class DegenerateImmersion(WeylTwistError):
    pass


class DegenerateSpan(WeylTwistError):
    pass


class NotHarmonic(WeylTwistError):
    pass


class NotMonopole(WeylTwistError):
    pass


class SchemaError(WeylTwistError):
    pass


class ParseError(WeylTwistError):
    """Expression syntax error.

    ``offset`` and ``end`` are byte offsets into the source text; ``expected``
    is the set of token kinds that would have been accepted.
    """

    def __init__(self, message, offset, end=None, expected=()):
        self.offset = offset
        self.end = offset if end is None else end
        self.expected = frozenset(expected)
        detail = f"{message} at offset {offset}"
        if self.end != offset:
            detail += f"-{self.end}"
        if self.expected:
            detail += f" (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__(detail)
