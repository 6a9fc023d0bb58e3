"""Exception hierarchy shared by all modules."""


class SymredError(Exception):
    """Base class for every error raised by this package."""


class InputError(SymredError, ValueError):
    """Malformed or inconsistent input (dimensions, grids, configs)."""


class RepresentationError(SymredError):
    """A matrix does not expand in the Lie algebra basis."""


class DecompositionError(SymredError):
    """A metric block is singular or not positive definite."""


class ChartExitError(SymredError):
    """A trajectory left the declared chart domain."""


class DriftError(SymredError):
    """Group constraint residual exceeded the configured tolerance."""


class NonFiniteError(SymredError):
    """A right-hand side produced NaN or inf."""
