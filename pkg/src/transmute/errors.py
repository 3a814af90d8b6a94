"""Exception and warning types raised across the package."""


class TransmuteError(Exception):
    """Base class for all library errors."""


class NonVanishingViolation(TransmuteError):
    """The particular solution (f, g) comes too close to zero on the grid."""


class InvariantViolation(TransmuteError):
    """An internal algebraic identity failed, which signals an assembly bug."""


class SingularSystem(TransmuteError):
    """The normal equations could not be solved at the requested ridge."""


class DomainViolation(TransmuteError, ValueError):
    """A point lies outside the domain where a quantity is defined."""


class ComplexCharacteristic(TransmuteError):
    """The characteristic function is not real up to a constant phase."""


class BracketLost(TransmuteError):
    """Root refinement left its sign-change bracket."""


class StepTooCoarse(TransmuteError, ValueError):
    """The RK4 step is too large for the requested spectral parameter."""


class CompatibilityViolation(TransmuteError, ValueError):
    """Goursat data do not satisfy the commutation compatibility conditions."""


class NonConvergence(TransmuteError):
    """Successive approximations stopped contracting."""


class ParseError(TransmuteError, ValueError):
    """Malformed expression; ``position`` is the 0-based column of the fault."""

    def __init__(self, message, position=None):
        super().__init__(message if position is None else f"{message} (at column {position})")
        self.position = position


class EvalError(TransmuteError, ValueError):
    """An expression produced non-finite values on its domain."""


class TruncationWarning(UserWarning):
    """A truncated power series has not converged at the requested lambda."""
