"""Exception types shared across the package."""


class UqcptError(Exception):
    """Base class for errors raised by this package."""


class InsufficientDataError(UqcptError, ValueError):
    """An operation needs more observations than the sample provides."""


class DegenerateSampleError(UqcptError, ValueError):
    """The sample carries no usable variation (e.g. constant input)."""


class SingularDensityError(UqcptError, ArithmeticError):
    """A kernel density estimate fell below the positivity floor.

    Studentization divides by an estimated density; rather than return an
    enormous variance from a vanishing denominator, estimators raise this.
    """
