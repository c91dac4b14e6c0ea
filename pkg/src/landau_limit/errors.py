"""Exception types shared by all modules."""


class DomainError(ValueError):
    """Argument outside the supported range of an operation."""


class SingularPairError(ValueError):
    """Kernel evaluated at (numerically) coincident momenta."""


class AccuracyError(RuntimeError):
    """A built-in refinement or resolution check failed."""


class GridResolutionError(AccuracyError):
    """The momentum grid does not resolve the equilibrium well enough."""


class InstabilityError(RuntimeError):
    """Time integration blew up (norm grew by more than the allowed factor)."""
