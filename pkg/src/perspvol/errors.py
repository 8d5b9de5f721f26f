"""Exception types raised by perspvol."""


class CombinatorialBlowupError(ValueError):
    """An enumeration (permutations, subsets, monomials) exceeds its cap."""


class GenericityError(ValueError):
    """A coefficient vector has a (near-)vanishing subset sum.

    ``witness`` holds the 0-based indices of the offending subset.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DomainError(ValueError):
    """A point or parameter lies outside the domain an operation accepts."""


class RangeError(OverflowError):
    """A result does not fit in binary64; ``exponent`` is the natural-log size."""

    def __init__(self, message, exponent=None):
        super().__init__(message)
        self.exponent = exponent


class SupermodularityError(ValueError):
    """The Kuhn interpolant is not the concave envelope for this function."""


class ConsistencyError(ArithmeticError):
    """A computed quantity violates an invariant it must satisfy."""
