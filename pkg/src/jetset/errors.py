"""Exception types raised by the engine."""

from __future__ import annotations


class JetsetError(Exception):
    """Base class for all engine errors."""


class NotDivisible(JetsetError):
    """Exact polynomial division failed: divisor does not divide dividend."""


class ZeroDenominator(JetsetError):
    """A rational function with zero denominator was about to be formed."""


class MissingAssignment(JetsetError):
    """A point evaluation did not assign every variable of the expression."""


class OrderOverflow(JetsetError):
    """A total derivative would exceed the jet order of the current context."""


class SingularMap(JetsetError):
    """A jet map cannot be prolonged because D_x of the x-image vanishes."""


class NoInverse(JetsetError):
    """Pushforward requested through a map with no stored inverse."""


class PreconditionFailed(JetsetError):
    """An operation's documented precondition does not hold for the input."""


class DenominatorVanishesOnLocus(JetsetError):
    """A denominator reduces to zero modulo a reduction chain."""


class SamplerExhausted(JetsetError):
    """The point sampler of a reduction chain ran out of retries."""


class EvaluationFailure(JetsetError):
    """A coefficient denominator vanished at a sample point."""


class NotSquare(JetsetError):
    """Lie determinant requested for a non-square coefficient matrix."""


class DomainError(JetsetError):
    """Arguments outside the documented domain of a closed-form formula."""


class SchemaError(JetsetError):
    """Catalog data failed validation; message carries the record location."""


class UnknownClaimKind(JetsetError):
    """A catalog claim has a kind with no registered checker."""


class ParseError(JetsetError):
    """Syntax error in the expression surface language."""

    def __init__(self, line: int, column: int, expected: str):
        self.line = line
        self.column = column
        self.expected = expected
        super().__init__(f"parse error at {line}:{column}: expected {expected}")


class UnknownIdentifier(ParseError):
    """An identifier in an expression does not resolve in the context."""

    def __init__(self, line: int, column: int, name: str):
        self.name = name
        super().__init__(line, column, f"known identifier (got {name!r})")
