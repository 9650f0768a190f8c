"""Exception types shared across the package."""


class SizeLimitError(ValueError):
    """An enumeration or exact computation was requested beyond its guard."""


class DimensionError(ValueError):
    """Operands have incompatible sizes or a non-square matrix was passed."""


class OrderViolationError(ValueError):
    """A lattice operation was called on arguments violating refinement."""


class SingularGramError(ArithmeticError):
    """The Gram matrix is exactly singular; no pseudo-inverse is attempted."""


class InsufficientReplicasError(ValueError):
    """Too few Monte Carlo replicas for the requested estimator."""
