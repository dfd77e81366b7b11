"""Exception hierarchy.

Every error raised on purpose by the package derives from ``GaussPidError``.
The CLI maps ``ValidationError`` subclasses to exit code 2 and
``NumericalError`` subclasses to exit code 3.
"""


class GaussPidError(Exception):
    pass


class ValidationError(GaussPidError, ValueError):
    """Input is malformed or outside the supported domain."""


class NumericalError(GaussPidError, ArithmeticError):
    """Computation failed for numerical reasons (singularity, divergence)."""


class OverlappingBlocks(ValidationError):
    pass


class UnsupportedTarget(ValidationError):
    pass


class EmptyGrid(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class DegenerateConstraint(ValidationError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class SingularBlock(NumericalError):
    pass


class SingularHistory(NumericalError):
    pass


class UnstableModel(NumericalError):
    pass


class NotConverged(NumericalError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NegativeInformation(NumericalError):
    pass
