"""Exception hierarchy shared across the package."""


class GnmhError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GnmhError):
    """An array has a shape incompatible with the declared dimensions."""


class UserFunctionFailure(GnmhError):
    """The user-supplied model function raised or returned garbage."""


class NotPositiveDefinite(GnmhError):
    """Cholesky factorization failed; the matrix is not positive definite."""


class NotPSD(GnmhError):
    """A prior precision matrix has a negative eigenvalue."""


class InvalidDilation(GnmhError):
    """Dilation factor outside (0, 1]."""


class SingularProposal(GnmhError):
    """The Gauss-Newton proposal precision H + J'J is not positive definite."""


class InitialGuessOutsideDomain(GnmhError):
    """The model indicator is 0 at the starting point."""


class InvalidPolicy(GnmhError):
    """Back-off policy parameters out of range."""


class BurnTooLarge(GnmhError):
    """Asked to burn more samples than the chain holds."""


class CorruptCheckpoint(GnmhError):
    """Checkpoint file failed version or checksum validation."""


class IOFailure(GnmhError):
    """Checkpoint file could not be read."""


class CheckpointWriteFailure(GnmhError):
    """Checkpoint file could not be written."""


class PointOutsideDomain(GnmhError):
    """Jacobian test could not find an in-domain point after many redraws."""


class EmptyChain(GnmhError):
    """Operation requires a nonempty chain."""


class SeriesTooShort(GnmhError):
    """Series too short for a stable autocorrelation-time estimate."""


class NonConvergentWindow(GnmhError):
    """No self-consistent autocorrelation window below a tenth of the series."""


class LagTooLarge(GnmhError):
    """Requested lag is not smaller than the series length."""


class NonFiniteDensity(GnmhError):
    """Quadrature encountered a NaN or +inf density value."""
