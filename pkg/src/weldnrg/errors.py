"""Exception hierarchy shared by every module."""


class WeldingError(Exception):
    """Base class for all errors raised by weldnrg."""


class InvalidParameterError(WeldingError, ValueError):
    """A precondition on an input parameter does not hold."""


class NumericFailure(WeldingError, ArithmeticError):
    """A numerical step failed (non-convergence, lost definiteness, ...).

    ``residual`` carries the worst offending quantity when one is known.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DSLParseError(InvalidParameterError):
    """Malformed homeomorphism expression; ``position`` is a 0-based offset."""

    def __init__(self, message, text, position):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}")

    def annotated(self):
        return f"{self.args[0]}\n  {self.text}\n  {' ' * self.position}^"
