"""Exception hierarchy shared by all spinstar modules."""


class SpinStarError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(SpinStarError, ValueError):
    """Invalid input: bad parameters, malformed tuples, inconsistent shapes."""


class SectorSizeError(SpinStarError):
    """A requested sector exceeds the configured dimension cap or memory budget."""


class DecompositionError(SpinStarError):
    """Eigendecomposition failed or did not meet its accuracy contract."""


class ConsistencyError(SpinStarError):
    """A runtime self-check failed (norm drift, broken invariant, corrupted matrix)."""
