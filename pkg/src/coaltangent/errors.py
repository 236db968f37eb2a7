class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class NumericError(ArithmeticError):
    """A numerical procedure failed to reach its target accuracy."""

    def __init__(self, message, achieved_tolerance=None):
        super().__init__(message)
        self.achieved_tolerance = achieved_tolerance
