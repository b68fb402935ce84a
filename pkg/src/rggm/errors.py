"""Exception hierarchy shared by all modules."""


class RggmError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(RggmError, ValueError):
    """Invalid input: bad shapes, out-of-range parameters, malformed files,
    mismatched topologies, or size caps exceeded."""


class NumericalError(RggmError, ArithmeticError):
    """Numerical failure that persists after the recovery policy
    (e.g. Cholesky breakdown, or a rank-1 removal guard that still trips
    after a full refresh)."""
