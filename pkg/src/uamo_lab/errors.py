"""Exception types shared across the package."""


class UamoLabError(Exception):
    """Base class for all package errors."""


class DomainError(UamoLabError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class RationalFrequency(UamoLabError):
    """Continued-fraction expansion terminated: omega is rational at working precision."""


class InsufficientPrecision(UamoLabError):
    """The continued-fraction step exhausted the significant digits of omega."""


class DepthExceeded(UamoLabError, IndexError):
    """A convergent index beyond the stored expansion depth was requested."""


class DegenerateCoupling(DomainError):
    """lambda1 = 0 or lambda2 = 0: cocycle normalization would divide by zero."""


class IntervalTooSmall(DomainError):
    """Finite restriction needs at least three sites."""


class NearSingularRho(UamoLabError):
    """|rho_n| fell below the working floor at some index."""

    def __init__(self, index, value=None):
        self.index = index
        self.value = value
        super().__init__(f"|rho| near zero at index {index}"
                         + (f" (|rho|={value:.3e})" if value is not None else ""))


class ZeroAlpha(UamoLabError):
    """alpha_{a-1} = 0: the transfer/determinant connection divides by it."""


class SingularDenominator(UamoLabError):
    """A determinant in a denominator is exactly zero."""


class CollidingNodes(UamoLabError):
    """Two interpolation nodes have coinciding sine values."""


class OutOfRegime(UamoLabError):
    """Window selection preconditions violated; message names the failed inequality."""


class ResonantPhase(UamoLabError):
    """A sine factor underflowed during the defect computation."""

    def __init__(self, x1, ell):
        self.x1 = x1
        self.ell = ell
        super().__init__(f"sine factor underflow at (x1={x1}, ell={ell})")


class SingularDeterminant(UamoLabError):
    """Determinant sample was exactly zero where a log-average needed it."""


class ScaleTooLarge(UamoLabError):
    """Resonance scale q_n does not fit inside the profile radius."""


class FlatProfile(UamoLabError):
    """Eigenfunction envelope has too little dynamic range to fit a decay rate."""


class EigensolverFailure(UamoLabError):
    """Eigendecomposition failed or produced residuals above tolerance."""


class NonResonanceViolated(UamoLabError):
    """The phase theta failed the non-resonance gate for this frequency."""
