"""Exception types shared across the package."""


class RumourError(Exception):
    """Base class for all errors raised by this package."""


class ConstraintViolation(RumourError, ValueError):
    """A model or preset parameter violates its admissibility constraint."""


class ThetaBoundary(RumourError):
    """Operation requires 0 < theta < 1 but theta sits at a boundary."""


class DomainError(RumourError, ValueError):
    """Argument lies outside the mathematical domain of the function."""


class NoBracket(RumourError):
    """Root bracketing failed.  Cannot happen for validated parameters."""


class NotApplicable(RumourError):
    """No closed form exists for these parameters."""


class TooLarge(RumourError):
    """Population size exceeds the exact-oracle limit."""


class IntegrationFailure(RumourError):
    """Adaptive ODE integration could not meet its tolerance."""
