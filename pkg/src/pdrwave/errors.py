"""Exception and warning types raised across the package."""


class DimensionMismatch(ValueError):
    """Operand shapes are incompatible."""


class ZeroModulusElement(ValueError):
    """Retraction input has an element with (numerically) zero modulus."""


class NegativePsi(ValueError):
    """Radial excess of a pre-retraction point is negative."""


class MonotonicityViolation(RuntimeError):
    """Cost increased under parameters that guarantee descent."""


class DegenerateDenominator(ZeroDivisionError):
    """Transmit quadratic form underflowed while evaluating the transmit-receive pattern."""


class SolverError(RuntimeError):
    """An iterative solve failed to converge within its iteration cap."""


class ConvergenceWarning(RuntimeWarning):
    """An iterative estimate stopped before reaching its tolerance."""
