"""Exception types shared across the package."""


class AlgebraError(ValueError):
    """Structure constants do not define a stratified nilpotent Lie algebra."""


class AntisymmetryViolation(AlgebraError):
    pass


class JacobiViolation(AlgebraError):
    def __init__(self, triple, residual=None):
        self.triple = triple
        self.residual = residual
        super().__init__(f"Jacobi identity fails for index triple {triple}: residual {residual}")


class GradingViolation(AlgebraError):
    pass


class StratificationError(AlgebraError):
    """Some layer is not generated by brackets with the first layer."""


class DimensionMismatch(ValueError):
    pass


class DependentInput(ValueError):
    """Vectors are linearly dependent; span membership cannot be read off the form."""


class InternalError(RuntimeError):
    """An identity that must hold by construction failed."""


class PreconditionDefect(Exception):
    """The vanishing hypothesis of the chain check does not hold on the grid.

    ``defect`` is the per-cell residual field and ``report`` the partial
    chain report computed before giving up.
    """

    def __init__(self, message, defect=None, report=None):
        super().__init__(message)
        self.defect = defect
        self.report = report


class SaturationWarning(UserWarning):
    """Box counts at this scale are limited by sampling density, not geometry."""


class QuadratureWarning(UserWarning):
    """The two sphere charts disagree on their overlap beyond tolerance."""
