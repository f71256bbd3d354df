"""Exception types raised across the package."""


class PurityVQAError(Exception):
    """Base class for all package errors."""


class DimMismatch(PurityVQAError, ValueError):
    pass


class NotNormalized(PurityVQAError, ValueError):
    pass


class InvalidState(PurityVQAError, ValueError):
    """Matrix is not Hermitian positive semidefinite."""


class NonInvertible(PurityVQAError, ValueError):
    pass


class RankDeficient(PurityVQAError, ValueError):
    """Input has rank < 2; purity minimization is trivial for pure states."""


class AlphaOutOfRange(PurityVQAError, ValueError):
    pass


class ImaginaryTraceProduct(PurityVQAError, ValueError):
    """Trace product has a non-negligible imaginary part."""


class InvalidShots(PurityVQAError, ValueError):
    pass


class InvalidFraction(PurityVQAError, ValueError):
    pass


class DegenerateDenominator(PurityVQAError, ArithmeticError):
    """tr(rho eta^2k) is too small: the ansatz state misses rho's support."""

    def __init__(self, message, subsystem=None):
        super().__init__(message)
        self.subsystem = subsystem


class NonOrthonormalBasis(PurityVQAError, ValueError):
    pass


class MuOutOfRange(PurityVQAError, ValueError):
    pass


class ParamOutOfRange(PurityVQAError, ValueError):
    pass


class AllProbesFailed(PurityVQAError, RuntimeError):
    pass


class StageNonConvergence(PurityVQAError, RuntimeError):
    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class DeltaTooLarge(PurityVQAError, ValueError):
    pass


class NeighborhoodTooLarge(PurityVQAError, ValueError):
    pass


class FitDiverged(PurityVQAError, RuntimeError):
    pass


class ConfigInvalid(PurityVQAError, ValueError):
    pass
