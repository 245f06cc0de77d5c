class CosetGaugeError(Exception):
    """Base class for every error raised by this package."""


class SpanViolation(CosetGaugeError):
    """A matrix did not lie in the span of the algebra basis."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class DependentBasis(CosetGaugeError):
    pass


class DegenerateKilling(CosetGaugeError):
    pass


class OutsideChart(CosetGaugeError):
    pass


class NoConvergence(CosetGaugeError):
    pass


class Inconsistent(CosetGaugeError):
    """The linear system for the 1-form coefficients has no exact solution."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class ScenarioParseError(CosetGaugeError):
    pass


class ValidationError(CosetGaugeError):
    pass
