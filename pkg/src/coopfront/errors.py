"""Exception types shared across the solvers."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class NumericalFailure(RuntimeError):
    """An iterative method failed to deliver a result within its budget.

    ``last_iterate`` and ``residual`` carry whatever the method had when it
    gave up, so callers can log or retry from there.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class DivergenceError(NumericalFailure):
    """A time integration left the region where the solution must stay."""


class BlowUpError(DivergenceError):
    pass


class GeometryError(NumericalFailure):
    """The fronts crossed (h <= g)."""


class InvariantViolation(AssertionError):
    """A computed object broke a structural invariant it is supposed to hold."""
