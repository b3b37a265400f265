"""Exception types raised across the package."""


class GeoquadError(Exception):
    """Base class for all package errors."""


class NonSkew(GeoquadError, ValueError):
    """A matrix handed to ``vee`` is not skew-symmetric."""


class DomainViolation(GeoquadError, ValueError):
    """An argument lies outside the domain where a bound is defined."""


class SingularInertia(GeoquadError, ValueError):
    pass


class NumericalBlowup(GeoquadError, ArithmeticError):
    """A state component left the finite range during integration."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class DegenerateThrustDirection(GeoquadError, ArithmeticError):
    pass


class HeadingParallel(GeoquadError, ArithmeticError):
    pass


class OutOfBarrierDomain(GeoquadError, ValueError):
    pass


class InvalidPsiCap(GeoquadError, ValueError):
    pass


class InvalidVariant(GeoquadError, ValueError):
    pass


class IllConditioned(GeoquadError, ArithmeticError):
    pass


class ConfigError(GeoquadError, ValueError):
    pass


class OutsideL2(UserWarning):
    """Attitude error reached the antipodal set, where Psi >= 2."""
