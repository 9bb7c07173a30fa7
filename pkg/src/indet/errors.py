"""Exception hierarchy shared by every module of the package."""


class IndetError(Exception):
    """Base class for all errors raised by ``indet``."""


class NumericalError(IndetError):
    """A quadrature node or objective evaluation was not finite."""


class DomainError(IndetError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class CompatibilityError(IndetError, ValueError):
    """Margins violate ``min f + min g >= 1`` (or its discrete analogue)."""

    def __init__(self, message, slack=None, cell=None):
        super().__init__(message)
        self.slack = slack
        self.cell = cell


class DegenerateError(IndetError, ValueError):
    """A margin is uniform, so indetermination collapses to independence."""


class PositivityError(IndetError, ValueError):
    """A constructed density is negative somewhere on the validation grid."""

    def __init__(self, message, point=None, value=None):
        super().__init__(message)
        self.point = point
        self.value = value


class IntegrabilityError(IndetError, ValueError):
    """A density is not square integrable (or not bounded where required)."""


class SingularDensityError(IndetError, ZeroDivisionError):
    """A margin density vanishes where its reciprocal is needed."""


class MonotonicityError(IndetError, ValueError):
    """A constructed quantile function is not nondecreasing."""


class MarginMismatchError(IndetError, ValueError):
    """Declared margins of a custom law disagree with its numerical margins."""


class EfficiencyError(IndetError, RuntimeError):
    """A rejection sampler accepts too rarely to be usable."""
