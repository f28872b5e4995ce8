"""Exception types shared across the package."""


class PhilapError(Exception):
    """Base class for all package errors."""


class DomainError(PhilapError):
    """An argument lies outside the mathematical domain of the operation."""


class RangeError(PhilapError):
    """A bracketing search ran out of doublings without enclosing a root."""


class NumericError(PhilapError):
    """A quadrature or iteration failed to reach its tolerance."""


class ConditionViolation(PhilapError):
    """A structural growth or sign condition failed; carries a witness point."""

    def __init__(self, message: str, witness=None, value=None):
        super().__init__(message)
        self.witness = witness
        self.value = value


class StructuralError(PhilapError):
    """Malformed input data (unordered breakpoints, missing crossing, ...)."""
