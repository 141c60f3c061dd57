"""Exception types shared across the package."""


class VineError(Exception):
    """Base class for all errors raised by vinelearn."""


class DomainError(VineError, ValueError):
    """An argument lies outside the open unit interval."""


class ParameterError(VineError, ValueError):
    """A copula parameter lies outside its family's domain."""


class DegenerateDataError(VineError, ValueError):
    """Input data carries no usable variation (e.g. a constant column)."""


class ConvergenceError(VineError, ArithmeticError):
    """A numerical routine failed to converge."""


class StructureError(VineError, ValueError):
    """A vine structure or model document is malformed."""


class TrainingDivergenceError(VineError, ArithmeticError):
    """The training objective stayed non-finite for too long."""
