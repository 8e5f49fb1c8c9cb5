"""Exception hierarchy shared by all phsplit modules."""


class PHSplitError(Exception):
    """Base class for errors raised by phsplit."""


class DimensionError(PHSplitError, ValueError):
    """Operands have incompatible shapes."""


class NonFiniteError(PHSplitError, FloatingPointError):
    """A matrix, state or input value is NaN or infinite."""


class ValidationError(PHSplitError, ValueError):
    """A system violates the port-Hamiltonian structure assumptions."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UnknownSchemeError(PHSplitError, KeyError):
    """Scheme name is not in the catalogue."""

    def __str__(self):
        return f"unknown scheme: {self.args[0]!r}"


class SchemeError(PHSplitError, ValueError):
    """Scheme cannot be used for the requested operation."""


class QuadratureError(PHSplitError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class IndeterminateOrderError(PHSplitError, ArithmeticError):
    """All measured errors sit at the round-off floor, so no order can be fitted."""


class StepError(PHSplitError, ArithmeticError):
    """A stepper failed; carries the index of the offending step."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index
