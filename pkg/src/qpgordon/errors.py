"""Exception hierarchy shared by all modules."""


class QPGordonError(Exception):
    """Base class for every error raised by :mod:`qpgordon`."""


class SpecError(QPGordonError, ValueError):
    """A frequency/potential/config string failed to parse.

    ``position`` is the 0-based column of the offending character.
    """

    def __init__(self, message, text="", position=None):
        self.text = text
        self.position = position
        if text and position is not None:
            caret = " " * position + "^"
            message = f"{message} (at column {position})\n  {text}\n  {caret}"
        super().__init__(message)


class PrecisionExhausted(QPGordonError):
    """The input precision radius does not certify the requested depth.

    ``prefix`` holds the certified part of the expansion.
    """

    def __init__(self, message, prefix=None):
        super().__init__(message)
        self.prefix = prefix


class RationalInput(QPGordonError):
    """The continued fraction terminated; ``prefix`` is the full expansion."""

    def __init__(self, message, prefix=None):
        super().__init__(message)
        self.prefix = prefix


class InsufficientDepth(QPGordonError):
    """Not enough partial quotients/convergents for the request."""


DepthInsufficient = InsufficientDepth


class BadBounds(QPGordonError, ValueError):
    pass


class DivergentIntegral(QPGordonError):
    """Quadrature tail failed to shrink (log(1+|f|) looks non-integrable)."""


class EmptySet(QPGordonError, ValueError):
    pass


class UnboundedVariation(QPGordonError):
    pass


class DeltaTooLarge(QPGordonError, ValueError):
    pass


class SingularPhase(QPGordonError):
    """An orbit point fell inside the guard radius of a singular point.

    ``indices`` lists the offending orbit indices.
    """

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class PrecisionLoss(QPGordonError):
    pass


class UnboundedEntries(QPGordonError):
    pass


class RangeTooSmall(QPGordonError, IndexError):
    pass


class NotAnEigenvalue(QPGordonError):
    pass


class DegeneracyWarning(UserWarning):
    pass
