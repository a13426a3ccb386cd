"""Exception types shared across the package."""


class ResonetError(Exception):
    """Base class for package errors."""


class GraphFormatError(ResonetError):
    """Malformed or inconsistent graph input (edge lists, JSON)."""


class ConvergenceError(ResonetError):
    """An iterative numerical procedure failed to reach its target."""


class QuadratureError(ConvergenceError):
    """Adaptive quadrature missed its relative-error target.

    Carries the achieved estimate so callers can still inspect it.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class DegenerateRootsError(ResonetError):
    """Polynomial roots too close for the first-order perturbation formula."""


class FeasibilityError(ResonetError):
    """Constraint system admits no feasible point for the given budget."""
