"""Exception types shared across the package."""
from __future__ import annotations


class UnimeasError(Exception):
    """Base class for all package errors."""


class BudgetExceeded(UnimeasError):
    """A search or series ran past its caller-supplied step budget."""

    def __init__(self, message: str, partial: object = None) -> None:
        super().__init__(message)
        self.partial = partial


class PreconditionError(UnimeasError):
    """An operation was called outside its declared domain."""


class RepresentationError(UnimeasError):
    """A map or kernel broke its declared modulus of continuity."""


class MonotonicityError(UnimeasError):
    """A declared-monotone approximation sequence decreased."""


class OutOfRange(UnimeasError):
    """An inversion target lies outside the range of the map."""
