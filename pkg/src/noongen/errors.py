"""Exception hierarchy shared across the package."""


class NoonGenError(Exception):
    """Base class for all package errors."""


class ContractViolation(NoonGenError, ValueError):
    """An operation was called outside its documented preconditions."""


class NormalizationError(NoonGenError, ArithmeticError):
    """A zero vector was normalized, usually an impossible measurement branch."""


class OutOfModeledRange(ContractViolation):
    """Inputs fall outside the range a closed-form expression covers."""
