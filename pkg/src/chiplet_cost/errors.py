"""Exception hierarchy.

Every error carries an optional ``key``: the dotted configuration path that
produced the bad value, so the CLI can point at the offending entry.
"""

from __future__ import annotations


class CostModelError(Exception):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.message = message
        self.key = key

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": self.message, "key": self.key}

    def __str__(self) -> str:
        if self.key:
            return f"{self.message} (at {self.key})"
        return self.message


class InvariantViolation(CostModelError, ValueError):
    pass


class ParseError(CostModelError, ValueError):
    pass


class UnknownNodeReference(CostModelError, KeyError):
    # KeyError.__str__ would quote the message
    __str__ = CostModelError.__str__


class EmptySystem(CostModelError, ValueError):
    pass


class MonolithicWithD2D(CostModelError, ValueError):
    pass


class NodeMismatchWithinChiplet(CostModelError, ValueError):
    pass


class NegativeArea(CostModelError, ValueError):
    pass


class DieLargerThanWafer(CostModelError, ValueError):
    pass


class OutOfRangeYield(CostModelError, ValueError):
    pass


class ZeroYield(CostModelError, ValueError):
    pass


class FlowNotSupported(CostModelError, ValueError):
    pass


class NonMonolithicInSoCGroup(CostModelError, ValueError):
    pass


class ZeroQuantity(CostModelError, ValueError):
    pass


class EmptyCounts(CostModelError, ValueError):
    pass


class FootprintMismatch(CostModelError, ValueError):
    pass


class CountOverflow(CostModelError, OverflowError):
    pass


class NoCrossover(CostModelError):
    """No quantity in the searched range makes the multi-chip system cheaper."""


class RangeExhausted(NoCrossover):
    """A crossover exists, but above the upper end of the searched range."""
