"""Exception hierarchy.

The CLI maps these onto exit codes: ``ValidationError`` -> 3,
``NumericalError`` -> 4, ``MeshIOError``/``ParseError`` -> 5.
"""


class FracellError(Exception):
    pass


class ValidationError(FracellError, ValueError):
    """An input violates a documented invariant."""


class DimensionMismatch(ValidationError):
    pass


class TopologyError(ValidationError):
    pass


class DegenerateElement(ValidationError):
    pass


class RefinementTooCoarse(ValidationError):
    pass


class DeltaTooLarge(ValidationError):
    pass


class ParseError(FracellError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(FracellError):
    pass


class NotConverged(NumericalError):
    """Iteration budget exhausted; ``report`` and ``x`` hold the last state."""

    def __init__(self, message, report=None, x=None):
        super().__init__(message)
        self.report = report
        self.x = x


class BreakdownError(NumericalError):
    pass


class CholeskyFailure(NumericalError):
    pass


class JacobiNotConverged(NotConverged):
    pass


class StabilityMonitorViolation(NumericalError):
    pass
