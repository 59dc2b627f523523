"""Exception types shared by all deltamax modules."""

from __future__ import annotations


class DeltamaxError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(DeltamaxError):
    """Two points (or a point and a domain) disagree on dimension."""


class DomainViolation(DeltamaxError):
    """A point lies outside the domain it was supposed to belong to."""


class NonFinite(DeltamaxError):
    """Evaluation produced inf/NaN where a finite real was required."""


class UnknownCatalogEntry(DeltamaxError):
    """Catalog lookup for a name that was never registered."""


class InvalidDomain(DeltamaxError):
    """DomainSpec parameters violate the constructor invariants."""


class DomainParseError(DeltamaxError):
    """Domain text does not match the `shape:param[:flags]` grammar."""


class LexError(DeltamaxError):
    """Unrecognized character in an expression source string."""

    def __init__(self, position: int, message: str):
        self.position = position
        super().__init__(f"{position}: {message}")


class ParseError(DeltamaxError):
    """Token stream does not form a valid expression."""

    def __init__(self, position: int, message: str, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = expected
        if expected:
            message = f"{message} (expected {', '.join(expected)})"
        super().__init__(f"{position}: {message}")


class UnboundVariable(DeltamaxError):
    """Expression evaluation with a free variable missing from the environment."""


class EmptySpherePreimage(DeltamaxError):
    """No point with |f(x)-f(p)| = eps was found.

    The searched radius is attached so "no preimage within R" can be told
    apart from "no preimage at all", which finite sampling cannot decide.
    """

    def __init__(self, message: str, searched_radius: float):
        self.searched_radius = searched_radius
        super().__init__(message)


class OutOfRange(DeltamaxError):
    """Inverse evaluation target provably outside the function's range."""


class ConstantFunction(DeltamaxError):
    """Sampled function spread is below tolerance; epsilon bound undefined."""


class WindowTooSmall(DeltamaxError):
    """Oracle window contains no violator but is smaller than the requested radius."""


class WitnessesStagnated(DeltamaxError):
    """Witness-pair distances stopped decreasing before the requested count."""

    def __init__(self, message: str, pairs=None):
        self.pairs = pairs
        super().__init__(message)
