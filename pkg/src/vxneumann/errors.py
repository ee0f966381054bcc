"""Exception hierarchy shared by all modules."""


class VxError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(VxError, ValueError):
    """A domain, field, or run configuration is malformed."""


class ValidationError(VxError, ValueError):
    """Input data violates an admissibility rule (exponent range, symmetry, PSD...)."""


class ShapeMismatchError(VxError, ValueError):
    """Fields live on incompatible supports."""


class DegenerateWeightError(VxError, ValueError):
    """A weight has zero total mass where a weighted average is required."""


class DomainError(VxError, ValueError):
    """An operation was called outside the hypotheses it is valid under."""


class NumericalRangeError(VxError, ArithmeticError):
    """Root bracketing failed or a value left the representable range."""


class UndefinedRatioError(VxError, ZeroDivisionError):
    """A ratio has a vanishing denominator (e.g. constant probe field)."""


class PreconditionError(VxError, ValueError):
    """A required input (such as a Poincare constant) is missing or invalid."""


class ConvergenceFailure(VxError, RuntimeError):
    """The solver stopped before reaching its tolerance.

    The partial :class:`~vxneumann.neumann.SolverReport` (best iterate and
    its residual) is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EstimationFailure(VxError, RuntimeError):
    """Every restart of the Poincare-constant search was degenerate."""
