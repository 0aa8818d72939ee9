"""Exception types shared across the package.

Everything derives from TricompError so callers can catch the whole family.
The CLI maps these onto its exit-code contract: regime/precondition problems
exit 3, convergence problems exit 4.
"""


class TricompError(Exception):
    """Base class for all package-specific errors."""


class RegimeError(TricompError):
    """Parameters fall outside the regime required by the requested construction."""


class NoMonotoneWaveError(TricompError):
    """Speed below the minimal wave speed: the equilibrium linearization has
    complex roots, so no monotone front exists."""

    def __init__(self, c: float, c_min: float):
        self.c = c
        self.c_min = c_min
        super().__init__(
            f"no monotone wave for c={c:.6g} < minimal speed {c_min:.6g}"
        )


class H3UnsatisfiedError(TricompError):
    """The cooperation-dominance predicate a2*u >= v fails on the computed
    two-species wave; a2 is not large enough for the upper-solution
    construction."""

    def __init__(self, min_value: float):
        self.min_value = min_value
        super().__init__(
            f"a2*u - v attains negative minimum {min_value:.3e} on the "
            "two-species wave; a2 is not large enough"
        )


class StabilityError(TricompError):
    """Grid too coarse for the advection term: diagonal dominance of the
    discretized operator is lost. Refine the grid."""


class SingularMatrixError(TricompError):
    """Tridiagonal elimination hit a vanishing pivot."""


class GridMismatchError(TricompError):
    """Profiles expected on a common grid live on different grids."""


class ConvergenceError(TricompError):
    """Nonlinear solve stalled; carries the final residual."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message)


class MaxIterationsError(ConvergenceError):
    """Iteration cap reached; .best holds the last iterate plus diagnostics."""

    def __init__(self, message: str, best=None, residual: float | None = None):
        super().__init__(message, residual)
        self.best = best


class SandwichViolationError(TricompError):
    """A monotone iterate escaped the [lower, upper] interval by more than
    tolerance, typically because the shift beta is too small."""


class VerificationError(TricompError):
    """A constructed upper/lower solution violates its defining inequalities
    beyond slack; carries the offending component and node."""

    def __init__(self, message: str, component: str | None = None,
                 node: int | None = None, violation: float | None = None):
        self.component = component
        self.node = node
        self.violation = violation
        super().__init__(message)


class OrderingFailureError(TricompError):
    """No admissible shift orders the upper/lower pair."""


class PreconditionError(TricompError):
    """End-point dominance required by the sliding-window comparison fails."""


class TailTooShortError(TricompError):
    """Too few nodes in the decay-fit window."""


class BlowUpError(TricompError):
    """A simulated field left the physically admissible range."""


class InsufficientHistoryError(TricompError):
    """The stored field history does not span the kernel's time horizon."""


class NoCrossingError(TricompError):
    """The tracked level is never crossed in a frame."""


class NonMonotoneFrontError(TricompError):
    """The tracked level is crossed more than once: not a monotone front."""
