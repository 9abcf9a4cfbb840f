"""Exception hierarchy.

Errors that indicate bad input (CLI exit code 2) derive from
:class:`UsageError`; errors that indicate a numerical failure (exit code 1)
derive from :class:`NumericalError`.
"""


class LSIError(Exception):
    """Base class for all errors raised by lsistab."""


class UsageError(LSIError, ValueError):
    """Input violates a documented precondition."""


class InvalidArgumentError(UsageError):
    pass


class PreconditionViolation(UsageError):
    """A mathematical precondition of a check does not hold.

    ``condition`` names the violated condition, ``value`` carries the
    offending quantity when there is one.
    """

    def __init__(self, condition, value=None):
        self.condition = condition
        self.value = value
        msg = condition if value is None else f"{condition} (got {value:.12g})"
        super().__init__(msg)


class InvalidDensityError(UsageError):
    pass


class DerivativeInconsistentError(UsageError):
    pass


class DegenerateTransportError(UsageError):
    pass


class NumericalError(LSIError, ArithmeticError):
    pass


class EvaluationError(NumericalError):
    """Integrand returned a non-finite value at ``node``."""

    def __init__(self, node, value):
        self.node = float(node)
        self.value = value
        super().__init__(f"non-finite integrand value {value!r} at x={self.node:.17g}")


class ToleranceNotMet(NumericalError):
    """Adaptive refinement stopped before reaching the target tolerance."""

    def __init__(self, message, estimate=None, error=None):
        self.estimate = estimate
        self.error = error
        super().__init__(message)


class DivergentIntegralError(ToleranceNotMet):
    pass
