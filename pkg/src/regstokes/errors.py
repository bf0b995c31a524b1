"""Exception types shared across the library."""


class InvalidParameterError(ValueError):
    """A scalar parameter (epsilon, viscosity, tolerance, ...) is out of range."""


class SingularEvaluationError(ArithmeticError):
    """Singular kernel evaluated at (numerically) coincident points."""


class InvalidGeometryError(ValueError):
    """Shape parameters do not describe a valid surface."""


class ResourceBudgetError(RuntimeError):
    """A requested discretisation or system exceeds the configured size cap."""


class NearSingularSystemError(RuntimeError):
    """Linear system reciprocal-condition estimate fell below threshold."""

    def __init__(self, message, epsilon=None, rcond=None):
        super().__init__(message)
        self.epsilon = epsilon
        self.rcond = rcond


class DegeneratePairError(RuntimeError):
    """Force/quadrature pair construction produced an unusable set."""


class EmptyCoarsePointError(RuntimeError):
    """Some coarse force points received no quadrature points."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class IntegrationFailureError(RuntimeError):
    """Time integration could not be completed."""

    def __init__(self, message, t_fail=None):
        super().__init__(message)
        self.t_fail = t_fail
