"""Exception hierarchy.

Two families: ``ValidationError`` for bad input (CLI exit status 2) and
``NumericalFailure`` for breakdowns of an otherwise valid computation
(CLI exit status 3).
"""


class QWScatterError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QWScatterError, ValueError):
    pass


class NumericalFailure(QWScatterError, ArithmeticError):
    pass


class NotUnitary(ValidationError):
    pass


class NotOfForm(ValidationError):
    pass


class FormMismatch(ValidationError):
    pass


class NonPenetrable(ValidationError):
    """A coin with vanishing diagonal entries blocks transmission."""


class WindowTooSmall(ValidationError):
    pass


class InvalidQuasiEnergy(ValidationError):
    pass


class GridTooCoarse(ValidationError):
    pass


class ThresholdSingularity(NumericalFailure):
    pass


class SolveSingular(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class DenominatorVanishes(NumericalFailure):
    pass


class EigenSolverFailure(NumericalFailure):
    pass
