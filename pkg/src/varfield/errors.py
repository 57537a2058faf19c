"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the operation's declared domain."""


class NumericError(ArithmeticError):
    """Non-finite value or step underflow during a numerical evaluation."""


class SingularTransformError(NumericError):
    """A transform refused to run because its matrix or scalar is too close to singular."""

    def __init__(self, message, conditioning=None):
        super().__init__(message)
        self.conditioning = conditioning
